#include "msem/tape.hpp"

#include <cassert>
#include <cmath>
#include <memory>
#include <cstring>
#include <limits>

namespace msem {

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}
}  // namespace

int Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&, const Node&)> back) {
  assert(value.all_finite() && "non-finite value out of a forward op");
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

Tensor& Tape::grad_buf(int id) {
  Node& n = node(id);
  if (!n.grad_ready) {
    n.grad = Tensor(n.value.shape());
    n.grad_ready = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_ready) throw ContractError("grad() before backward(), or on a no-grad node");
  return n.grad;
}

void Tape::accumulate(int id, const Tensor& g) {
  if (!node(id).needs_grad) return;
  Tensor& buf = grad_buf(id);
  check_same_shape(buf, g, "grad accumulate");
  double* d = buf.data();
  const double* s = g.data();
  for (int64_t i = 0; i < g.size(); ++i) d[i] += s[i];
}

void Tape::accumulate_scaled(int id, const Tensor& g, double c) {
  if (!node(id).needs_grad) return;
  Tensor& buf = grad_buf(id);
  check_same_shape(buf, g, "grad accumulate");
  double* d = buf.data();
  const double* s = g.data();
  for (int64_t i = 0; i < g.size(); ++i) d[i] += c * s[i];
}

int Tape::matmul(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  Tensor out;
  matmul_into(ta, tb, out);
  bool ng = needs_grad(a) || needs_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Node& self) {
    const Tensor& g = self.grad;
    const Tensor& ta = t.val(a);
    const Tensor& tb = t.val(b);
    const int64_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    if (t.needs_grad(a)) {
      // da = g * b^T
      Tensor da({m, k});
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
          const double gv = g.at(i, j);
          if (gv == 0.0) continue;
          for (int64_t l = 0; l < k; ++l) da.at(i, l) += gv * tb.at(l, j);
        }
      if (ta.rank() == 1) da = Tensor(ta.shape(), da.vec());
      t.accumulate(a, da);
    }
    if (t.needs_grad(b)) {
      // db = a^T * g
      Tensor db({k, n});
      for (int64_t i = 0; i < m; ++i)
        for (int64_t l = 0; l < k; ++l) {
          const double av = ta.at(i, l);
          if (av == 0.0) continue;
          for (int64_t j = 0; j < n; ++j) db.at(l, j) += av * g.at(i, j);
        }
      if (tb.rank() == 1) db = Tensor(tb.shape(), db.vec());
      t.accumulate(b, db);
    }
  });
}

int Tape::add(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check_same_shape(ta, tb, "add");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) += tb.at(i);
  bool ng = needs_grad(a) || needs_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

int Tape::sub(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check_same_shape(ta, tb, "sub");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) -= tb.at(i);
  bool ng = needs_grad(a) || needs_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate_scaled(b, self.grad, -1.0);
  });
}

int Tape::hadamard(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check_same_shape(ta, tb, "hadamard");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) *= tb.at(i);
  bool ng = needs_grad(a) || needs_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Node& self) {
    const Tensor& g = self.grad;
    if (t.needs_grad(a)) {
      Tensor da = g;
      const Tensor& tb = t.val(b);
      for (int64_t i = 0; i < da.size(); ++i) da.at(i) *= tb.at(i);
      t.accumulate(a, da);
    }
    if (t.needs_grad(b)) {
      Tensor db = g;
      const Tensor& ta = t.val(a);
      for (int64_t i = 0; i < db.size(); ++i) db.at(i) *= ta.at(i);
      t.accumulate(b, db);
    }
  });
}

int Tape::divide(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  check_same_shape(ta, tb, "divide");
  Tensor out = ta;
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) /= tb.at(i);
  bool ng = needs_grad(a) || needs_grad(b);
  return push(std::move(out), ng, [a, b](Tape& t, const Node& self) {
    const Tensor& g = self.grad;
    const Tensor& ta = t.val(a);
    const Tensor& tb = t.val(b);
    if (t.needs_grad(a)) {
      Tensor da = g;
      for (int64_t i = 0; i < da.size(); ++i) da.at(i) /= tb.at(i);
      t.accumulate(a, da);
    }
    if (t.needs_grad(b)) {
      Tensor db = g;
      for (int64_t i = 0; i < db.size(); ++i)
        db.at(i) *= -ta.at(i) / (tb.at(i) * tb.at(i));
      t.accumulate(b, db);
    }
  });
}

int Tape::add_rowvec(int a, int v) {
  const Tensor& ta = val(a);
  const Tensor& tv = val(v);
  const int64_t m = ta.rows(), n = ta.cols();
  if (tv.size() != n) {
    throw ShapeError("add_rowvec: " + ta.shape_str() + " + " + tv.shape_str());
  }
  Tensor out = ta;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(i * n + j) += tv.at(j);
  bool ng = needs_grad(a) || needs_grad(v);
  return push(std::move(out), ng, [a, v, m, n](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    if (t.needs_grad(v)) {
      Tensor dv(t.val(v).shape());
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) dv.at(j) += self.grad.at(i * n + j);
      t.accumulate(v, dv);
    }
  });
}

int Tape::scale(int a, double c) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) *= c;
  return push(std::move(out), needs_grad(a), [a, c](Tape& t, const Node& self) {
    t.accumulate_scaled(a, self.grad, c);
  });
}

int Tape::add_const(int a, double c) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) += c;
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
  });
}

int Tape::sigmoid(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) {
    const double x = out.at(i);
    out.at(i) = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  int id = push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    for (int64_t i = 0; i < da.size(); ++i) {
      const double y = self.value.at(i);
      da.at(i) *= y * (1.0 - y);
    }
    t.accumulate(a, da);
  });
  return id;
}

int Tape::tanh_(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    for (int64_t i = 0; i < da.size(); ++i) {
      const double y = self.value.at(i);
      da.at(i) *= 1.0 - y * y;
    }
    t.accumulate(a, da);
  });
}

int Tape::relu(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) = out.at(i) > 0 ? out.at(i) : 0.0;
  // subgradient at 0 is 0
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    const Tensor& x = t.val(a);
    for (int64_t i = 0; i < da.size(); ++i)
      if (x.at(i) <= 0) da.at(i) = 0.0;
    t.accumulate(a, da);
  });
}

int Tape::exp_(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) = std::exp(out.at(i));
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    for (int64_t i = 0; i < da.size(); ++i) da.at(i) *= self.value.at(i);
    t.accumulate(a, da);
  });
}

int Tape::log_(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) = std::log(out.at(i));
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    const Tensor& x = t.val(a);
    for (int64_t i = 0; i < da.size(); ++i) da.at(i) /= x.at(i);
    t.accumulate(a, da);
  });
}

int Tape::sqrt_(int a) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i) out.at(i) = std::sqrt(out.at(i));
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    Tensor da = self.grad;
    for (int64_t i = 0; i < da.size(); ++i) da.at(i) *= 0.5 / self.value.at(i);
    t.accumulate(a, da);
  });
}

int Tape::clamp(int a, double lo, double hi) {
  Tensor out = val(a);
  for (int64_t i = 0; i < out.size(); ++i)
    out.at(i) = std::min(hi, std::max(lo, out.at(i)));
  return push(std::move(out), needs_grad(a), [a, lo, hi](Tape& t, const Node& self) {
    Tensor da = self.grad;
    const Tensor& x = t.val(a);
    for (int64_t i = 0; i < da.size(); ++i)
      if (x.at(i) < lo || x.at(i) > hi) da.at(i) = 0.0;
    t.accumulate(a, da);
  });
}

int Tape::softmax_rows(int a) {
  const Tensor& ta = val(a);
  const int64_t m = ta.rows(), n = ta.cols();
  Tensor out = ta;
  for (int64_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < n; ++j) mx = std::max(mx, out.at(i * n + j));
    double sum = 0;
    for (int64_t j = 0; j < n; ++j) {
      double e = std::exp(out.at(i * n + j) - mx);
      out.at(i * n + j) = e;
      sum += e;
    }
    for (int64_t j = 0; j < n; ++j) out.at(i * n + j) /= sum;
  }
  return push(std::move(out), needs_grad(a), [a, m, n](Tape& t, const Node& self) {
    Tensor da(self.value.shape());
    for (int64_t i = 0; i < m; ++i) {
      double dot = 0;
      for (int64_t j = 0; j < n; ++j)
        dot += self.grad.at(i * n + j) * self.value.at(i * n + j);
      for (int64_t j = 0; j < n; ++j)
        da.at(i * n + j) = self.value.at(i * n + j) * (self.grad.at(i * n + j) - dot);
    }
    t.accumulate(a, da);
  });
}

int Tape::layer_norm(int x, int gain, int bias, double eps) {
  const Tensor& tx = val(x);
  const Tensor& tg = val(gain);
  const Tensor& tb = val(bias);
  const int64_t m = tx.rows(), d = tx.cols();
  if (tg.size() != d || tb.size() != d) {
    throw ShapeError("layer_norm: gain/bias size must equal row width " + std::to_string(d));
  }
  // Cache normalized rows and per-row inverse stddev for backward.
  auto xhat = std::make_shared<Tensor>(tx.shape());
  auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<size_t>(m));
  Tensor out(tx.shape());
  for (int64_t i = 0; i < m; ++i) {
    double mean = 0;
    for (int64_t j = 0; j < d; ++j) mean += tx.at(i * d + j);
    mean /= static_cast<double>(d);
    double var = 0;
    for (int64_t j = 0; j < d; ++j) {
      const double c = tx.at(i * d + j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[static_cast<size_t>(i)] = is;
    for (int64_t j = 0; j < d; ++j) {
      const double xh = (tx.at(i * d + j) - mean) * is;
      xhat->at(i * d + j) = xh;
      out.at(i * d + j) = xh * tg.at(j) + tb.at(j);
    }
  }
  bool ng = needs_grad(x) || needs_grad(gain) || needs_grad(bias);
  return push(std::move(out), ng,
              [x, gain, bias, m, d, xhat, inv_sigma](Tape& t, const Node& self) {
    const Tensor& g = self.grad;
    if (t.needs_grad(gain)) {
      Tensor dg(t.val(gain).shape());
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < d; ++j) dg.at(j) += g.at(i * d + j) * xhat->at(i * d + j);
      t.accumulate(gain, dg);
    }
    if (t.needs_grad(bias)) {
      Tensor db(t.val(bias).shape());
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < d; ++j) db.at(j) += g.at(i * d + j);
      t.accumulate(bias, db);
    }
    if (t.needs_grad(x)) {
      const Tensor& tg = t.val(gain);
      Tensor dx(t.val(x).shape());
      for (int64_t i = 0; i < m; ++i) {
        double mean_dxh = 0, mean_dxh_xh = 0;
        for (int64_t j = 0; j < d; ++j) {
          const double dxh = g.at(i * d + j) * tg.at(j);
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xhat->at(i * d + j);
        }
        mean_dxh /= static_cast<double>(d);
        mean_dxh_xh /= static_cast<double>(d);
        const double is = (*inv_sigma)[static_cast<size_t>(i)];
        for (int64_t j = 0; j < d; ++j) {
          const double dxh = g.at(i * d + j) * tg.at(j);
          dx.at(i * d + j) = is * (dxh - mean_dxh - xhat->at(i * d + j) * mean_dxh_xh);
        }
      }
      t.accumulate(x, dx);
    }
  });
}

int Tape::transpose(int a) {
  const Tensor& ta = val(a);
  const int64_t m = ta.rows(), n = ta.cols();
  Tensor out({n, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out.at(j, i) = ta.at(i * n + j);
  return push(std::move(out), needs_grad(a), [a, m, n](Tape& t, const Node& self) {
    Tensor da(t.val(a).shape());
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) da.at(i * n + j) = self.grad.at(j * m + i);
    t.accumulate(a, da);
  });
}

int Tape::reshape(int a, std::vector<int64_t> shape) {
  Tensor out(shape, val(a).vec());
  return push(std::move(out), needs_grad(a), [a](Tape& t, const Node& self) {
    t.accumulate(a, Tensor(t.val(a).shape(), self.grad.vec()));
  });
}

int Tape::concat_rows(const std::vector<int>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: empty part list");
  const int64_t n = val(parts[0]).cols();
  int64_t m = 0;
  bool ng = false;
  for (int p : parts) {
    if (val(p).cols() != n) throw ShapeError("concat_rows: column mismatch");
    m += val(p).rows();
    ng = ng || needs_grad(p);
  }
  Tensor out({m, n});
  int64_t r = 0;
  for (int p : parts) {
    const Tensor& tp = val(p);
    std::memcpy(out.data() + r * n, tp.data(), static_cast<size_t>(tp.size()) * sizeof(double));
    r += tp.rows();
  }
  auto parts_copy = parts;
  return push(std::move(out), ng, [parts_copy, n](Tape& t, const Node& self) {
    int64_t r = 0;
    for (int p : parts_copy) {
      const int64_t pr = t.val(p).rows();
      Tensor dp(t.val(p).shape());
      std::memcpy(dp.data(), self.grad.data() + r * n,
                  static_cast<size_t>(pr * n) * sizeof(double));
      t.accumulate(p, dp);
      r += pr;
    }
  });
}

int Tape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: empty part list");
  const int64_t m = val(parts[0]).rows();
  int64_t n = 0;
  bool ng = false;
  for (int p : parts) {
    if (val(p).rows() != m) throw ShapeError("concat_cols: row mismatch");
    n += val(p).cols();
    ng = ng || needs_grad(p);
  }
  Tensor out({m, n});
  int64_t c = 0;
  for (int p : parts) {
    const Tensor& tp = val(p);
    const int64_t pc = tp.cols();
    for (int64_t i = 0; i < m; ++i)
      std::memcpy(out.data() + i * n + c, tp.data() + i * pc,
                  static_cast<size_t>(pc) * sizeof(double));
    c += pc;
  }
  auto parts_copy = parts;
  return push(std::move(out), ng, [parts_copy, m, n](Tape& t, const Node& self) {
    int64_t c = 0;
    for (int p : parts_copy) {
      const int64_t pc = t.val(p).cols();
      Tensor dp(t.val(p).shape());
      for (int64_t i = 0; i < m; ++i)
        std::memcpy(dp.data() + i * pc, self.grad.data() + i * n + c,
                    static_cast<size_t>(pc) * sizeof(double));
      t.accumulate(p, dp);
      c += pc;
    }
  });
}

int Tape::slice_rows(int a, int64_t r0, int64_t r1) {
  const Tensor& ta = val(a);
  const int64_t m = ta.rows(), n = ta.cols();
  if (r0 < 0 || r1 > m || r0 >= r1) throw ShapeError("slice_rows: bad range");
  Tensor out({r1 - r0, n});
  std::memcpy(out.data(), ta.data() + r0 * n, static_cast<size_t>(out.size()) * sizeof(double));
  return push(std::move(out), needs_grad(a), [a, r0, n](Tape& t, const Node& self) {
    Tensor da(t.val(a).shape());
    std::memcpy(da.data() + r0 * n, self.grad.data(),
                static_cast<size_t>(self.grad.size()) * sizeof(double));
    t.accumulate(a, da);
  });
}

int Tape::slice_cols(int a, int64_t c0, int64_t c1) {
  const Tensor& ta = val(a);
  const int64_t m = ta.rows(), n = ta.cols();
  if (c0 < 0 || c1 > n || c0 >= c1) throw ShapeError("slice_cols: bad range");
  const int64_t w = c1 - c0;
  Tensor out({m, w});
  for (int64_t i = 0; i < m; ++i)
    std::memcpy(out.data() + i * w, ta.data() + i * n + c0, static_cast<size_t>(w) * sizeof(double));
  return push(std::move(out), needs_grad(a), [a, c0, m, n, w](Tape& t, const Node& self) {
    Tensor da(t.val(a).shape());
    for (int64_t i = 0; i < m; ++i)
      std::memcpy(da.data() + i * n + c0, self.grad.data() + i * w,
                  static_cast<size_t>(w) * sizeof(double));
    t.accumulate(a, da);
  });
}

int Tape::sum_all(int a) {
  double s = 0;
  const Tensor& ta = val(a);
  for (int64_t i = 0; i < ta.size(); ++i) s += ta.at(i);
  return push(Tensor::scalar(s), needs_grad(a), [a](Tape& t, const Node& self) {
    const double g = self.grad.at(0);
    Tensor da = Tensor::full(t.val(a).shape(), g);
    t.accumulate(a, da);
  });
}

int Tape::mean_all(int a) {
  const int64_t n = val(a).size();
  int s = sum_all(a);
  return scale(s, 1.0 / static_cast<double>(n));
}

int Tape::col_max(int a) {
  const Tensor& ta = val(a);
  const int64_t m = ta.rows(), n = ta.cols();
  Tensor out({1, n});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n), 0);
  for (int64_t j = 0; j < n; ++j) {
    double best = ta.at(0 * n + j);
    for (int64_t i = 1; i < m; ++i) {
      if (ta.at(i * n + j) > best) {
        best = ta.at(i * n + j);
        (*argmax)[static_cast<size_t>(j)] = i;
      }
    }
    out.at(j) = best;
  }
  return push(std::move(out), needs_grad(a), [a, n, argmax](Tape& t, const Node& self) {
    Tensor da(t.val(a).shape());
    for (int64_t j = 0; j < n; ++j)
      da.at((*argmax)[static_cast<size_t>(j)] * n + j) = self.grad.at(j);
    t.accumulate(a, da);
  });
}

int Tape::lookup(int table, const std::vector<int64_t>& rows) {
  const Tensor& tt = val(table);
  const int64_t v = tt.rows(), d = tt.cols();
  const int64_t n = static_cast<int64_t>(rows.size());
  for (int64_t r : rows)
    if (r < 0 || r >= v) throw ContractError("lookup: row index out of range");
  Tensor out({n, d});
  for (int64_t i = 0; i < n; ++i)
    std::memcpy(out.data() + i * d, tt.data() + rows[static_cast<size_t>(i)] * d,
                static_cast<size_t>(d) * sizeof(double));
  auto rows_copy = rows;
  return push(std::move(out), needs_grad(table), [table, d, rows_copy](Tape& t, const Node& self) {
    Tensor dt(t.val(table).shape());
    for (size_t i = 0; i < rows_copy.size(); ++i)
      for (int64_t j = 0; j < d; ++j)
        dt.at(rows_copy[i] * d + j) += self.grad.at(static_cast<int64_t>(i) * d + j);
    t.accumulate(table, dt);
  });
}

int Tape::cross_entropy(int logits, int64_t target) {
  const Tensor& tl = val(logits);
  if (tl.rows() != 1) throw ShapeError("cross_entropy: logits must be a single row");
  const int64_t m = tl.cols();
  if (target < 0 || target >= m) throw ContractError("cross_entropy: class index out of range");
  double mx = tl.at(0);
  for (int64_t j = 1; j < m; ++j) mx = std::max(mx, tl.at(j));
  double sum = 0;
  for (int64_t j = 0; j < m; ++j) sum += std::exp(tl.at(j) - mx);
  const double lse = mx + std::log(sum);
  const double loss = lse - tl.at(target);
  return push(Tensor::scalar(loss), needs_grad(logits),
              [logits, target, m, mx, lse](Tape& t, const Node& self) {
    const double g = self.grad.at(0);
    const Tensor& tl = t.val(logits);
    Tensor dl(tl.shape());
    for (int64_t j = 0; j < m; ++j) dl.at(j) = g * std::exp(tl.at(j) - lse);
    dl.at(target) -= g;
    t.accumulate(logits, dl);
  });
}

void Tape::backward(int loss_id) {
  if (loss_id < 0 || loss_id >= size()) throw ContractError("backward: bad loss id");
  if (val(loss_id).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + val(loss_id).shape_str());
  }
  // Re-runnable: zero every gradient buffer first.
  for (Node& n : nodes_) {
    if (n.needs_grad) {
      n.grad = Tensor(n.value.shape());
      n.grad_ready = true;
    }
  }
  if (!node(loss_id).needs_grad) return;  // nothing on the tape is trainable
  grad_buf(loss_id).at(0) = 1.0;
  for (int i = loss_id; i >= 0; --i) {
    Node& n = node(i);
    if (n.needs_grad && n.back) n.back(*this, n);
  }
}

}  // namespace msem
