#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "msem/errors.hpp"
#include "msem/grad_check.hpp"
#include "msem/multitask.hpp"
#include "msem/rng.hpp"
#include "msem/tape.hpp"

using namespace msem;

namespace {

// u and v as 1-element-batch rows on a fresh tape.
struct Pair {
  Tape tape;
  int u, v;
  Pair(const Tensor& a, const Tensor& b) : u(tape.leaf(a)), v(tape.leaf(b)) {}
};

Tensor row(std::vector<double> vals) {
  Tensor t({1, static_cast<int64_t>(vals.size())});
  for (size_t i = 0; i < vals.size(); ++i) t.at(static_cast<int64_t>(i)) = vals[i];
  return t;
}

ParamStore match_params(double gamma, double alpha) {
  ParamStore p;
  p["match.gamma"] = Tensor::full({1}, gamma);
  p["match.alpha"] = Tensor::full({1}, alpha);
  return p;
}

double sigmoid1(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("cosine: hand values and zero-norm error") {
  {
    Pair pr(row({1, 0}), row({1, 0}));
    CHECK(pr.tape.val(cosine(pr.tape, pr.u, pr.v)).at(0) == doctest::Approx(1.0));
  }
  {
    Pair pr(row({1, 0}), row({0, 1}));
    CHECK(pr.tape.val(cosine(pr.tape, pr.u, pr.v)).at(0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    Pair pr(row({1, 0}), row({-2, 0}));
    CHECK(pr.tape.val(cosine(pr.tape, pr.u, pr.v)).at(0) == doctest::Approx(-1.0));
  }
  {
    Pair pr(row({0, 0}), row({1, 0}));
    CHECK_THROWS_AS(cosine(pr.tape, pr.u, pr.v), DataError);
  }
}

TEST_CASE("cosine_match_score: hand values") {
  SUBCASE("u=v, gamma=1, alpha=0 -> sigmoid(1)") {
    Pair pr(row({2, 1}), row({2, 1}));
    ParamStore ps = match_params(1.0, 0.0);
    ParamIds p = enter_params(pr.tape, ps);
    double got = pr.tape.val(cosine_match_score(pr.tape, pr.u, pr.v, p)).at(0);
    CHECK(got == doctest::Approx(0.7311).epsilon(1e-4));
  }
  SUBCASE("orthogonal, gamma=1, alpha=0 -> 0.5") {
    Pair pr(row({1, 0}), row({0, 3}));
    ParamStore ps = match_params(1.0, 0.0);
    ParamIds p = enter_params(pr.tape, ps);
    double got = pr.tape.val(cosine_match_score(pr.tape, pr.u, pr.v, p)).at(0);
    CHECK(got == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("u=v with defaults gamma=10, alpha=0.5 -> sigmoid(5)") {
    Pair pr(row({1, 2, 3}), row({1, 2, 3}));
    ParamStore ps = match_params(10.0, 0.5);
    ParamIds p = enter_params(pr.tape, ps);
    double got = pr.tape.val(cosine_match_score(pr.tape, pr.u, pr.v, p)).at(0);
    CHECK(got == doctest::Approx(0.9933).epsilon(1e-4));
  }
}

TEST_CASE("cosine_match_score_value agrees with the tape version") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor a = rng.uniform_tensor({1, 5}, -2, 2);
    Tensor b = rng.uniform_tensor({1, 5}, -2, 2);
    double gamma = rng.uniform(0.5, 15.0), alpha = rng.uniform(-0.5, 0.9);
    Pair pr(a, b);
    ParamStore ps = match_params(gamma, alpha);
    ParamIds p = enter_params(pr.tape, ps);
    double cos_val = pr.tape.val(cosine(pr.tape, pr.u, pr.v)).at(0);
    double tape_score = pr.tape.val(cosine_match_score(pr.tape, pr.u, pr.v, p)).at(0);
    CHECK(cosine_match_score_value(cos_val, gamma, alpha) ==
          doctest::Approx(tape_score).epsilon(1e-12));
  }
}

TEST_CASE("cosine_match_score: symmetry and positive-scale invariance") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor a = rng.uniform_tensor({1, 6}, -2, 2);
    Tensor b = rng.uniform_tensor({1, 6}, -2, 2);
    double c = rng.uniform(0.01, 50.0);
    ParamStore ps = match_params(10.0, 0.5);

    Pair ab(a, b);
    ParamIds p1 = enter_params(ab.tape, ps);
    double s_ab = ab.tape.val(cosine_match_score(ab.tape, ab.u, ab.v, p1)).at(0);

    Pair ba(b, a);
    ParamIds p2 = enter_params(ba.tape, ps);
    double s_ba = ba.tape.val(cosine_match_score(ba.tape, ba.u, ba.v, p2)).at(0);
    REQUIRE(s_ab == s_ba);

    Tensor ac = a;
    for (int64_t i = 0; i < ac.size(); ++i) ac.at(i) *= c;
    Pair scaled(ac, b);
    ParamIds p3 = enter_params(scaled.tape, ps);
    double s_scaled = scaled.tape.val(cosine_match_score(scaled.tape, scaled.u, scaled.v, p3)).at(0);
    REQUIRE(s_scaled == doctest::Approx(s_ab).epsilon(1e-12));
  }
}

TEST_CASE("matching_loss: hand values") {
  auto loss_of = [](double y_hat, int label) {
    Tape t;
    int yh = t.leaf(Tensor::full({1}, y_hat));
    return t.val(matching_loss(t, yh, label)).at(0);
  };
  CHECK(loss_of(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_of(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_of(1.0 - 1e-9, 1) < 1e-6);
  CHECK(loss_of(1e-9, 0) < 1e-6);
  // clamped: exact 0/1 predictions stay finite
  CHECK(std::isfinite(loss_of(0.0, 1)));
  CHECK(std::isfinite(loss_of(1.0, 0)));
}

TEST_CASE("intent_loss: hand values") {
  SUBCASE("zero weights, M=4 -> ln 4") {
    ParamStore ps;
    ps["intent.W"] = Tensor({3, 4});
    ps["intent.b"] = Tensor({4});
    Tape t;
    ParamIds p = enter_params(t, ps);
    int u = t.leaf(row({1, -2, 0.5}));
    CHECK(t.val(intent_loss(t, u, 2, p)).at(0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  SUBCASE("M=1 -> loss 0") {
    ParamStore ps;
    ps["intent.W"] = Tensor({3, 1});
    ps["intent.b"] = Tensor({1});
    Tape t;
    ParamIds p = enter_params(t, ps);
    int u = t.leaf(row({1, 2, 3}));
    CHECK(t.val(intent_loss(t, u, 0, p)).at(0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("huge logit on the true class -> loss < 1e-6") {
    ParamStore ps;
    Tensor W({1, 3});
    W.at(0, 1) = 1000.0;  // u=[1] drives class-1 logit to 1000
    ps["intent.W"] = W;
    ps["intent.b"] = Tensor({3});
    Tape t;
    ParamIds p = enter_params(t, ps);
    int u = t.leaf(row({1}));
    CHECK(t.val(intent_loss(t, u, 1, p)).at(0) < 1e-6);
  }
}

TEST_CASE("combined_loss: mixing weights") {
  auto combine = [](double lm, double lu, double lv, double lambda) {
    Tape t;
    int a = t.leaf(Tensor::full({1}, lm));
    int b = t.leaf(Tensor::full({1}, lu));
    int c = t.leaf(Tensor::full({1}, lv));
    LossWeights w;
    w.lambda = lambda;
    return t.val(combined_loss(t, a, b, c, w)).at(0);
  };
  CHECK(combine(1.0, 2.0, 2.0, 0.8) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(combine(3.0, 7.0, 9.0, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(combine(3.0, 7.0, 9.0, 0.0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("combined_loss: lambda=1 gives exactly-zero intent gradients") {
  ParamStore ps = init_heads(/*final_dim=*/4, /*num_classes=*/3, MatchHeadConfig{}, /*seed=*/5);
  Rng rng(6);
  ps["u"] = rng.uniform_tensor({1, 4}, -1, 1);
  ps["v"] = rng.uniform_tensor({1, 4}, -1, 1);
  Tape t;
  ParamIds p = enter_params(t, ps);
  int y_hat = cosine_match_score(t, p.at("u"), p.at("v"), p);
  int lm = matching_loss(t, y_hat, 1);
  int lu = intent_loss(t, p.at("u"), 0, p);
  int lv = intent_loss(t, p.at("v"), 2, p);
  LossWeights w;
  w.lambda = 1.0;
  t.backward(combined_loss(t, lm, lu, lv, w));
  const Tensor& gW = t.grad(p.at("intent.W"));
  const Tensor& gb = t.grad(p.at("intent.b"));
  for (int64_t i = 0; i < gW.size(); ++i) CHECK(gW.at(i) == 0.0);
  for (int64_t i = 0; i < gb.size(); ++i) CHECK(gb.at(i) == 0.0);
  // and the matching gradient is live
  CHECK(t.grad(p.at("match.gamma")).at(0) != 0.0);
}

TEST_CASE("combined_loss: lambda=0 gives exactly-zero matching gradients") {
  ParamStore ps = init_heads(4, 3, MatchHeadConfig{}, 5);
  Rng rng(7);
  ps["u"] = rng.uniform_tensor({1, 4}, -1, 1);
  ps["v"] = rng.uniform_tensor({1, 4}, -1, 1);
  Tape t;
  ParamIds p = enter_params(t, ps);
  int y_hat = cosine_match_score(t, p.at("u"), p.at("v"), p);
  int lm = matching_loss(t, y_hat, 1);
  int lu = intent_loss(t, p.at("u"), 0, p);
  int lv = intent_loss(t, p.at("v"), 2, p);
  LossWeights w;
  w.lambda = 0.0;
  t.backward(combined_loss(t, lm, lu, lv, w));
  CHECK(t.grad(p.at("match.gamma")).at(0) == 0.0);
  CHECK(t.grad(p.at("match.alpha")).at(0) == 0.0);
  bool any_intent = false;
  const Tensor& gW = t.grad(p.at("intent.W"));
  for (int64_t i = 0; i < gW.size(); ++i) any_intent = any_intent || gW.at(i) != 0.0;
  CHECK(any_intent);
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(8);
  ParamStore ps = init_heads(5, 3, MatchHeadConfig{}, 9);
  ps["u"] = rng.uniform_tensor({1, 5}, -1, 1);
  ps["v"] = rng.uniform_tensor({1, 5}, -1, 1);

  SUBCASE("matching loss, label 1 and 0") {
    for (int label : {1, 0}) {
      ScalarFn fn = [&, label](Tape& t, const ParamIds& p) {
        int y_hat = cosine_match_score(t, p.at("u"), p.at("v"), p);
        return matching_loss(t, y_hat, label);
      };
      GradCheckReport rep = grad_check(fn, ps);
      INFO("label " << label << " worst: " << rep.worst_param);
      CHECK(rep.max_rel_err < 1e-6);
    }
  }
  SUBCASE("intent loss") {
    ScalarFn fn = [&](Tape& t, const ParamIds& p) { return intent_loss(t, p.at("u"), 1, p); };
    GradCheckReport rep = grad_check(fn, ps);
    INFO("worst: " << rep.worst_param);
    CHECK(rep.max_rel_err < 1e-6);
  }
  SUBCASE("combined loss") {
    ScalarFn fn = [&](Tape& t, const ParamIds& p) {
      int y_hat = cosine_match_score(t, p.at("u"), p.at("v"), p);
      int lm = matching_loss(t, y_hat, 1);
      int lu = intent_loss(t, p.at("u"), 0, p);
      int lv = intent_loss(t, p.at("v"), 2, p);
      return combined_loss(t, lm, lu, lv, LossWeights{});
    };
    GradCheckReport rep = grad_check(fn, ps);
    INFO("worst: " << rep.worst_param);
    CHECK(rep.max_rel_err < 1e-6);
  }
}

TEST_CASE("init_heads: shapes and default scalars") {
  ParamStore ps = init_heads(6, 4, MatchHeadConfig{}, 11);
  CHECK(ps.at("intent.W").shape() == std::vector<int64_t>{6, 4});
  CHECK(ps.at("intent.b").shape() == std::vector<int64_t>{4});
  CHECK(ps.at("match.gamma").at(0) == 10.0);
  CHECK(ps.at("match.alpha").at(0) == 0.5);
}
