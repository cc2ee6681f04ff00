#include "msem/model.hpp"

#include "msem/errors.hpp"

namespace msem {

Model Model::init(const EncoderConfig& cfg, Vocab word_vocab, Vocab char_vocab,
                  int64_t num_classes, const MatchHeadConfig& match_cfg, uint64_t seed) {
  Model m;
  m.config = cfg;
  m.word_vocab = std::move(word_vocab);
  m.char_vocab = std::move(char_vocab);
  m.num_classes = num_classes;
  EncoderWeights enc = EncoderWeights::init(cfg, m.word_vocab.size(), m.char_vocab.size(), seed);
  m.params = std::move(enc.params);
  ParamStore heads = init_heads(cfg.final_dim(), num_classes, match_cfg, seed ^ 0x9E3779B97F4A7C15ULL);
  for (auto& [name, tensor] : heads) m.params[name] = std::move(tensor);
  return m;
}

Tensor Model::encode_sentence(const std::vector<std::string>& tokens) const {
  Tape tape;
  ParamIds ids = enter_params(tape, params, /*requires_grad=*/false);
  return tape.val(encode(tape, ids, index(tokens), config, /*train_mode=*/false));
}

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg) {
  return {
      {"word_dim", cfg.word_dim},       {"char_dim", cfg.char_dim},
      {"char_kernel", cfg.char_kernel}, {"char_filters", cfg.char_filters},
      {"gru_hidden", cfg.gru_hidden},   {"heads", cfg.heads},
      {"d_a", cfg.d_a},                 {"r_hops", cfg.r_hops},
      {"n_max", cfg.n_max},             {"ffn_inner", cfg.ffn_inner},
      {"dropout", cfg.dropout},
  };
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig cfg;
  cfg.word_dim = j.at("word_dim");
  cfg.char_dim = j.at("char_dim");
  cfg.char_kernel = j.at("char_kernel");
  cfg.char_filters = j.at("char_filters");
  cfg.gru_hidden = j.at("gru_hidden");
  cfg.heads = j.at("heads");
  cfg.d_a = j.at("d_a");
  cfg.r_hops = j.at("r_hops");
  cfg.n_max = j.at("n_max");
  cfg.ffn_inner = j.value("ffn_inner", int64_t{0});
  cfg.dropout = j.at("dropout");
  cfg.validate();
  return cfg;
}

Checkpoint to_checkpoint(const Model& model, const AdamState* opt_state, int64_t step) {
  Checkpoint ckpt;
  ckpt.config["encoder"] = encoder_config_to_json(model.config);
  ckpt.config["num_classes"] = model.num_classes;
  ckpt.config["step"] = step;
  ckpt.config["word_vocab"] = model.word_vocab.tokens;
  ckpt.config["char_vocab"] = model.char_vocab.tokens;
  ckpt.tensors = model.params;
  if (opt_state != nullptr) {
    ckpt.config["adam_step"] = opt_state->step;
    for (const auto& [name, tensor] : opt_state->m) ckpt.tensors["adam.m." + name] = tensor;
    for (const auto& [name, tensor] : opt_state->v) ckpt.tensors["adam.v." + name] = tensor;
  }
  return ckpt;
}

namespace {
Vocab vocab_from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw IoError("checkpoint vocab is missing the reserved <pad>/<unk> entries");
  }
  Vocab v;
  for (size_t i = 2; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}
}  // namespace

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model m;
  m.config = encoder_config_from_json(ckpt.config.at("encoder"));
  m.num_classes = ckpt.config.at("num_classes");
  m.word_vocab = vocab_from_tokens(ckpt.config.at("word_vocab").get<std::vector<std::string>>());
  m.char_vocab = vocab_from_tokens(ckpt.config.at("char_vocab").get<std::vector<std::string>>());
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind("adam.", 0) == 0) continue;
    m.params[name] = tensor;
  }
  if (!m.params.count("emb.word") || !m.params.count("match.gamma")) {
    throw IoError("checkpoint tensor table is missing required entries");
  }
  return m;
}

AdamState optimizer_state_from_checkpoint(const Checkpoint& ckpt) {
  AdamState state;
  state.step = ckpt.config.value("adam_step", int64_t{0});
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind("adam.m.", 0) == 0) state.m[name.substr(7)] = tensor;
    else if (name.rfind("adam.v.", 0) == 0) state.v[name.substr(7)] = tensor;
  }
  return state;
}

}  // namespace msem
