#include "msem/encoder.hpp"

#include <cmath>

#include "msem/errors.hpp"

namespace msem {

namespace {

// 1 - x, elementwise.
int one_minus(Tape& t, int x) { return t.add_const(t.scale(x, -1.0), 1.0); }

Tensor glorot(Rng& rng, int64_t fan_in, int64_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng.uniform_tensor({fan_in, fan_out}, -limit, limit);
}

// Snap to f32 so checkpoint round trips are bit-exact.
void snap_to_f32(Tensor& t) {
  for (int64_t i = 0; i < t.size(); ++i) t.at(i) = static_cast<double>(static_cast<float>(t.at(i)));
}

std::vector<int64_t> codepoint_ids(const std::string& token, const Vocab& char_vocab) {
  std::vector<int64_t> ids;
  size_t i = 0;
  while (i < token.size()) {
    size_t start = i;
    const auto b0 = static_cast<unsigned char>(token[i]);
    size_t len = 1;
    if ((b0 & 0xE0) == 0xC0) len = 2;
    else if ((b0 & 0xF0) == 0xE0) len = 3;
    else if ((b0 & 0xF8) == 0xF0) len = 4;
    i = std::min(token.size(), start + len);
    ids.push_back(char_vocab.id(token.substr(start, i - start)));
  }
  return ids;
}

}  // namespace

void EncoderConfig::validate() const {
  if (word_dim <= 0 || char_dim <= 0 || char_filters <= 0 || gru_hidden <= 0 || heads <= 0 ||
      d_a <= 0 || r_hops <= 0 || n_max <= 0 || char_kernel <= 0) {
    throw ContractError("EncoderConfig: all dimensions must be positive");
  }
  if (u() % heads != 0) {
    throw ContractError("EncoderConfig: u=" + std::to_string(u()) +
                        " not divisible by heads=" + std::to_string(heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("EncoderConfig: dropout must be in [0,1)");
}

EncoderConfig EncoderConfig::tiny() {
  EncoderConfig c;
  c.word_dim = 8;
  c.char_dim = 4;
  c.char_kernel = 3;
  c.char_filters = 4;
  c.gru_hidden = 4;  // u = 8
  c.heads = 2;
  c.d_a = 4;
  c.r_hops = 2;
  c.n_max = 16;
  c.dropout = 0.1;
  return c;
}

EncoderWeights EncoderWeights::init(const EncoderConfig& cfg, int64_t word_vocab,
                                    int64_t char_vocab, uint64_t seed) {
  cfg.validate();
  EncoderWeights w;
  w.config = cfg;
  w.word_vocab_size = word_vocab;
  w.char_vocab_size = char_vocab;
  Rng rng(seed);
  auto mat = [&](const std::string& name, int64_t in, int64_t out) {
    w.params[name] = glorot(rng, in, out);
  };
  auto vec0 = [&](const std::string& name, int64_t n) { w.params[name] = Tensor({n}); };

  // Embedding tables: PAD row zero, everything else uniform.
  {
    Tensor we = rng.uniform_tensor({word_vocab, cfg.word_dim}, -0.05, 0.05);
    for (int64_t j = 0; j < cfg.word_dim; ++j) we.at(Vocab::kPad, j) = 0.0;
    w.params["emb.word"] = std::move(we);
    Tensor ce = rng.uniform_tensor({char_vocab, cfg.char_dim}, -0.05, 0.05);
    for (int64_t j = 0; j < cfg.char_dim; ++j) ce.at(Vocab::kPad, j) = 0.0;
    w.params["emb.char"] = std::move(ce);
  }
  mat("char.conv.w", cfg.char_kernel * cfg.char_dim, cfg.char_filters);
  vec0("char.conv.b", cfg.char_filters);

  const int64_t di = cfg.d_in(), h = cfg.gru_hidden, u = cfg.u();
  for (const char* dir : {"fw", "bw"}) {
    for (const char* gate : {"r", "f", "h"}) {
      mat("gru." + std::string(dir) + ".W" + gate + "1", di, h);
      mat("gru." + std::string(dir) + ".W" + gate + "2", h, h);
    }
  }
  for (int64_t i = 0; i < cfg.heads; ++i) {
    const std::string pre = "aru.head" + std::to_string(i) + ".";
    mat(pre + "Wq", u, cfg.d_k());
    mat(pre + "Wk", u, cfg.d_k());
    mat(pre + "Wv", u, cfg.d_k());
  }
  w.params["aru.Mpos"] = Tensor({cfg.n_max, cfg.n_max});
  for (const char* gate : {"f", "h", "r"}) {
    mat("aru.W" + std::string(gate) + "1", u, u);
    mat("aru.W" + std::string(gate) + "2", u, u);
  }
  mat("ffn.W1", u, cfg.inner());
  vec0("ffn.b1", cfg.inner());
  mat("ffn.W2", cfg.inner(), u);
  vec0("ffn.b2", u);
  w.params["norm.gain"] = Tensor::full({u}, 1.0);
  vec0("norm.bias", u);
  mat("pool.Ws1", cfg.d_a, u);
  mat("pool.Ws2", cfg.r_hops, cfg.d_a);
  const int64_t D = cfg.final_dim();
  for (int layer = 0; layer < 2; ++layer) {
    const std::string pre = "hw" + std::to_string(layer) + ".";
    mat(pre + "Wg", D, D);
    vec0(pre + "bg", D);
    mat(pre + "Wh", D, D);
    vec0(pre + "bh", D);
  }
  for (auto& [name, tensor] : w.params) snap_to_f32(tensor);
  return w;
}

void EncoderWeights::set_word_embeddings(const Tensor& table) {
  const Tensor& cur = params.at("emb.word");
  if (!cur.same_shape(table)) {
    throw ShapeError("word embedding table shape " + table.shape_str() + " does not match " +
                     cur.shape_str());
  }
  Tensor t = table;
  for (int64_t i = 0; i < t.size(); ++i)
    t.at(i) = static_cast<double>(static_cast<float>(t.at(i)));
  params["emb.word"] = std::move(t);
}

std::atomic<uint64_t>& truncation_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter;
}

SentenceIds index_sentence(const std::vector<std::string>& tokens, const Vocab& word_vocab,
                           const Vocab& char_vocab, int64_t n_max) {
  if (tokens.empty()) throw DataError("index_sentence: empty token sequence");
  SentenceIds sent;
  const auto n = static_cast<int64_t>(tokens.size());
  const int64_t kept = std::min(n, n_max);
  if (n > n_max) truncation_counter().fetch_add(1, std::memory_order_relaxed);
  for (int64_t i = 0; i < kept; ++i) {
    const auto& tok = tokens[static_cast<size_t>(i)];
    sent.words.push_back(word_vocab.id(tok));
    sent.chars.push_back(codepoint_ids(tok, char_vocab));
  }
  return sent;
}

int char_conv_maxpool(Tape& tape, const ParamIds& p, const std::vector<int64_t>& chars,
                      const EncoderConfig& cfg) {
  if (chars.empty()) throw ContractError("char_conv_maxpool: empty word");
  const int64_t k = cfg.char_kernel, cd = cfg.char_dim;
  int emb = tape.lookup(p.at("emb.char"), chars);
  int64_t len = static_cast<int64_t>(chars.size());
  if (len < k) {
    // zero-pad short words to kernel width
    int pad = tape.leaf(Tensor({k - len, cd}));
    emb = tape.concat_rows({emb, pad});
    len = k;
  }
  std::vector<int> windows;
  for (int64_t pos = 0; pos + k <= len; ++pos) {
    windows.push_back(tape.reshape(tape.slice_rows(emb, pos, pos + k), {1, k * cd}));
  }
  int stacked = windows.size() == 1 ? windows[0] : tape.concat_rows(windows);
  int conv = tape.relu(tape.add_rowvec(tape.matmul(stacked, p.at("char.conv.w")), p.at("char.conv.b")));
  return tape.col_max(conv);
}

int embed_words(Tape& tape, const ParamIds& p, const SentenceIds& sent, const EncoderConfig& cfg) {
  if (sent.length() == 0) throw ContractError("embed_words: empty sentence");
  int word_part = tape.lookup(p.at("emb.word"), sent.words);
  std::vector<int> char_rows;
  char_rows.reserve(sent.chars.size());
  for (const auto& chars : sent.chars) char_rows.push_back(char_conv_maxpool(tape, p, chars, cfg));
  int char_part = char_rows.size() == 1 ? char_rows[0] : tape.concat_rows(char_rows);
  return tape.concat_cols({word_part, char_part});
}

namespace {

// One GRU direction over the rows of x in the given visit order.
std::vector<int> gru_direction(Tape& tape, const ParamIds& p, int x, int64_t n,
                               const std::string& prefix, bool reverse,
                               const EncoderConfig& cfg) {
  const int Wr1 = p.at(prefix + "Wr1"), Wr2 = p.at(prefix + "Wr2");
  const int Wf1 = p.at(prefix + "Wf1"), Wf2 = p.at(prefix + "Wf2");
  const int Wh1 = p.at(prefix + "Wh1"), Wh2 = p.at(prefix + "Wh2");
  int h = tape.leaf(Tensor({1, cfg.gru_hidden}));  // h0 = 0
  std::vector<int> states(static_cast<size_t>(n));
  for (int64_t step = 0; step < n; ++step) {
    const int64_t t = reverse ? n - 1 - step : step;
    int xt = tape.slice_rows(x, t, t + 1);
    int r = tape.sigmoid(tape.add(tape.matmul(xt, Wr1), tape.matmul(h, Wr2)));
    int f = tape.sigmoid(tape.add(tape.matmul(xt, Wf1), tape.matmul(h, Wf2)));
    int htil = tape.tanh_(tape.add(tape.matmul(xt, Wh1), tape.matmul(tape.hadamard(h, r), Wh2)));
    h = tape.add(tape.hadamard(one_minus(tape, f), htil), tape.hadamard(f, h));
    states[static_cast<size_t>(t)] = h;
  }
  return states;
}

}  // namespace

int bigru_forward(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg) {
  const int64_t n = tape.val(x).rows();
  auto fw = gru_direction(tape, p, x, n, "gru.fw.", false, cfg);
  auto bw = gru_direction(tape, p, x, n, "gru.bw.", true, cfg);
  int fw_all = fw.size() == 1 ? fw[0] : tape.concat_rows(fw);
  int bw_all = bw.size() == 1 ? bw[0] : tape.concat_rows(bw);
  return tape.concat_cols({fw_all, bw_all});
}

int pos_multihead_attention(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg) {
  const int64_t n = tape.val(x).rows();
  if (n > cfg.n_max) throw ContractError("attention: sentence longer than n_max");
  int mpos = tape.slice_cols(tape.slice_rows(p.at("aru.Mpos"), 0, n), 0, n);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_k()));
  std::vector<int> heads;
  heads.reserve(static_cast<size_t>(cfg.heads));
  for (int64_t i = 0; i < cfg.heads; ++i) {
    const std::string pre = "aru.head" + std::to_string(i) + ".";
    int q = tape.matmul(x, p.at(pre + "Wq"));
    int k = tape.matmul(x, p.at(pre + "Wk"));
    int v = tape.matmul(x, p.at(pre + "Wv"));
    int logits = tape.add(tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_dk), mpos);
    heads.push_back(tape.matmul(tape.softmax_rows(logits), v));
  }
  // heads are concatenated directly; there is no output projection
  return heads.size() == 1 ? heads[0] : tape.concat_cols(heads);
}

int aru_forward(Tape& tape, const ParamIds& p, int x, const EncoderConfig& cfg) {
  const int64_t n = tape.val(x).rows();
  int c = pos_multihead_attention(tape, p, x, cfg);
  int f = tape.sigmoid(tape.add(tape.matmul(x, p.at("aru.Wf1")), tape.matmul(c, p.at("aru.Wf2"))));
  int htil = tape.tanh_(tape.add(tape.matmul(x, p.at("aru.Wh1")), tape.matmul(c, p.at("aru.Wh2"))));
  // dynamic average pooling: the only sequential part
  int h_prev = tape.leaf(Tensor({1, cfg.u()}));
  std::vector<int> hs;
  hs.reserve(static_cast<size_t>(n));
  for (int64_t t = 0; t < n; ++t) {
    int ft = tape.slice_rows(f, t, t + 1);
    int ht = tape.slice_rows(htil, t, t + 1);
    h_prev = tape.add(tape.hadamard(one_minus(tape, ft), ht), tape.hadamard(ft, h_prev));
    hs.push_back(h_prev);
  }
  int h = hs.size() == 1 ? hs[0] : tape.concat_rows(hs);
  int r = tape.sigmoid(tape.add(tape.matmul(x, p.at("aru.Wr1")), tape.matmul(c, p.at("aru.Wr2"))));
  return tape.add(tape.hadamard(one_minus(tape, r), x), tape.hadamard(r, h));
}

int ffn_add_norm(Tape& tape, const ParamIds& p, int o, const EncoderConfig& cfg) {
  (void)cfg;
  int inner = tape.relu(tape.add_rowvec(tape.matmul(o, p.at("ffn.W1")), p.at("ffn.b1")));
  int ffn = tape.add_rowvec(tape.matmul(inner, p.at("ffn.W2")), p.at("ffn.b2"));
  return tape.layer_norm(tape.add(o, ffn), p.at("norm.gain"), p.at("norm.bias"));
}

int attentive_pool(Tape& tape, const ParamIds& p, int o, const EncoderConfig& cfg) {
  int s = tape.tanh_(tape.matmul(p.at("pool.Ws1"), tape.transpose(o)));  // [d_a × n]
  int a = tape.softmax_rows(tape.matmul(p.at("pool.Ws2"), s));           // [r × n]
  int m = tape.matmul(a, o);                                             // [r × u]
  return tape.reshape(m, {1, cfg.r_hops * cfg.u()});
}

int highway_net(Tape& tape, const ParamIds& p, int v, const EncoderConfig& cfg) {
  (void)cfg;
  for (int layer = 0; layer < 2; ++layer) {
    const std::string pre = "hw" + std::to_string(layer) + ".";
    int g = tape.sigmoid(tape.add_rowvec(tape.matmul(v, p.at(pre + "Wg")), p.at(pre + "bg")));
    int tr = tape.relu(tape.add_rowvec(tape.matmul(v, p.at(pre + "Wh")), p.at(pre + "bh")));
    v = tape.add(tape.hadamard(g, tr), tape.hadamard(one_minus(tape, g), v));
  }
  return v;
}

int encode(Tape& tape, const ParamIds& p, const SentenceIds& sent, const EncoderConfig& cfg,
           bool train_mode, Rng* dropout_rng) {
  int x = embed_words(tape, p, sent, cfg);
  int ctx = bigru_forward(tape, p, x, cfg);
  int o = aru_forward(tape, p, ctx, cfg);
  int normed = ffn_add_norm(tape, p, o, cfg);
  int pooled = attentive_pool(tape, p, normed, cfg);
  if (train_mode && cfg.dropout > 0.0 && dropout_rng != nullptr) {
    const double keep = 1.0 - cfg.dropout;
    Tensor mask({1, cfg.final_dim()});
    for (int64_t i = 0; i < mask.size(); ++i)
      mask.at(i) = dropout_rng->uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    pooled = tape.hadamard(pooled, tape.leaf(std::move(mask)));
  }
  return highway_net(tape, p, pooled, cfg);
}

Tensor encode_eval(const EncoderWeights& weights, const SentenceIds& sent) {
  Tape tape;
  ParamIds ids = enter_params(tape, weights.params, /*requires_grad=*/false);
  return tape.val(encode(tape, ids, sent, weights.config, /*train_mode=*/false));
}

}  // namespace msem
