// msem: train, index, and serve a sentence-encoder FAQ retrieval system.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <csignal>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "msem/ann.hpp"
#include "msem/errors.hpp"
#include "msem/graph.hpp"
#include "msem/retrieval.hpp"
#include "msem/service.hpp"
#include "msem/trainer.hpp"

namespace {

msem::RetrievalService* g_service = nullptr;

void handle_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

void add_encoder_flags(CLI::App* cmd, msem::EncoderConfig& cfg) {
  cmd->add_option("--word-dim", cfg.word_dim, "word embedding dimension");
  cmd->add_option("--char-dim", cfg.char_dim, "character embedding dimension");
  cmd->add_option("--char-filters", cfg.char_filters, "character conv filters");
  cmd->add_option("--char-kernel", cfg.char_kernel, "character conv kernel width");
  cmd->add_option("--gru-hidden", cfg.gru_hidden, "per-direction GRU hidden size");
  cmd->add_option("--heads", cfg.heads, "attention heads");
  cmd->add_option("--d-a", cfg.d_a, "attentive pooling inner size");
  cmd->add_option("--r-hops", cfg.r_hops, "attentive pooling hops");
  cmd->add_option("--n-max", cfg.n_max, "maximum sentence length");
  cmd->add_option("--dropout", cfg.dropout, "dropout after attentive pooling");
}

int cmd_stats(const std::string& pairs_path) {
  const auto pairs = msem::load_pairs_tsv(pairs_path);
  const auto stats = msem::corpus_overlap_stats(pairs);
  std::printf("pairs      %lld (pos %lld, neg %lld)\n",
              static_cast<long long>(stats.n_pos + stats.n_neg),
              static_cast<long long>(stats.n_pos), static_cast<long long>(stats.n_neg));
  std::printf("overlap_pos %.6f\n", stats.positive);
  std::printf("overlap_neg %.6f\n", stats.negative);
  std::printf("overlap_avg %.6f\n", stats.all);
  return 0;
}

int cmd_train(const std::string& train_path, const std::string& val_path,
              const std::string& embeddings_path, const std::string& out_path,
              msem::EncoderConfig enc_cfg, msem::TrainConfig train_cfg, int min_count,
              int min_cluster_size, double gamma, double alpha) {
  const auto train_pairs = msem::load_pairs_tsv(train_path);
  std::vector<msem::PairExample> val_pairs;
  if (!val_path.empty()) val_pairs = msem::load_pairs_tsv(val_path);

  const auto graph = msem::ParaphraseGraph::from_train_pairs(train_pairs);
  const auto components = msem::connected_components(graph);
  const auto labeling = msem::assign_intent_labels(graph, components, min_cluster_size);
  std::cerr << "intent classes: " << labeling.num_classes << " (from "
            << components.size() << " clusters)\n";

  auto word_vocab = msem::build_vocab(train_pairs, min_count);
  auto char_vocab = msem::build_char_vocab(train_pairs);
  std::cerr << "vocab: " << word_vocab.size() << " words, " << char_vocab.size() << " chars\n";

  msem::Model model = msem::Model::init(enc_cfg, std::move(word_vocab), std::move(char_vocab),
                                        labeling.num_classes, {gamma, alpha}, train_cfg.seed);
  if (!embeddings_path.empty()) {
    msem::Rng emb_rng(train_cfg.seed + 1);
    msem::Tensor table = msem::load_pretrained_embeddings(embeddings_path, model.word_vocab,
                                                          enc_cfg.word_dim, emb_rng);
    msem::EncoderWeights tmp;
    tmp.config = enc_cfg;
    tmp.params = model.params;
    tmp.set_word_embeddings(table);
    model.params = std::move(tmp.params);
  }

  train_cfg.verbose = true;
  const auto result = msem::train(train_pairs, val_pairs, labeling, std::move(model), train_cfg);
  std::cerr << "best validation accuracy " << result.best_metric << " after "
            << result.steps << " steps\n";
  msem::checkpoint_save(msem::to_checkpoint(result.best, &result.opt_state, result.steps), out_path);
  std::cerr << "checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_encode(const std::string& ckpt_path, const std::string& text) {
  const auto model = msem::model_from_checkpoint(msem::checkpoint_load(ckpt_path));
  const msem::Tensor v = model.encode_sentence(msem::tokenize(text));
  for (int64_t i = 0; i < v.size(); ++i)
    std::printf("%s%.8g", i ? " " : "", v.at(i));
  std::printf("\n");
  return 0;
}

int cmd_index_build(const std::string& faq_path, const std::string& ckpt_path,
                    const std::string& out_dir, const msem::IndexParams& params) {
  msem::build_offline(faq_path, ckpt_path, params, out_dir);
  std::cerr << "artifacts written to " << out_dir << "\n";
  return 0;
}

int cmd_query(const std::string& artifacts_dir, const std::string& text, int64_t k,
              double min_score, bool has_min_score) {
  const auto artifacts = msem::RetrievalArtifacts::load(artifacts_dir);
  auto result = artifacts.answer_query(text, k);
  if (has_min_score) {
    std::erase_if(result, [&](const msem::QueryHit& h) { return h.score < min_score; });
  }
  std::printf("%-8s %-8s %-8s %s\n", "id", "score", "cosine", "question / answer");
  for (const auto& h : result) {
    std::printf("%-8llu %-8.4f %-8.4f %s  =>  %s\n", static_cast<unsigned long long>(h.id),
                h.score, h.cosine, h.question.c_str(), h.answer.c_str());
  }
  return 0;
}

int cmd_serve(const std::string& artifacts_dir, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw msem::DataError("bind address must be host:port");
  const std::string host = bind.substr(0, colon);
  const int port = std::stoi(bind.substr(colon + 1));
  const auto artifacts = msem::RetrievalArtifacts::load(artifacts_dir);
  msem::RetrievalService service(artifacts);
  g_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "serving " << artifacts.item_count() << " items on " << bind << "\n";
  if (!service.listen(host, port)) {
    std::cerr << "cannot bind " << bind << "\n";
    return 2;
  }
  g_service = nullptr;
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& pairs_path, double threshold) {
  const auto model = msem::model_from_checkpoint(msem::checkpoint_load(ckpt_path));
  const auto pairs = msem::load_pairs_tsv(pairs_path);
  const msem::Metrics m = msem::evaluate(model, pairs, threshold);
  std::printf("pairs     %lld\n", static_cast<long long>(m.total()));
  std::printf("accuracy  %.4f\n", m.accuracy());
  std::printf("precision %.4f\n", m.precision());
  std::printf("recall    %.4f\n", m.recall());
  std::printf("f1        %.4f\n", m.f1());
  std::printf("confusion TP=%lld FP=%lld TN=%lld FN=%lld\n", static_cast<long long>(m.tp),
              static_cast<long long>(m.fp), static_cast<long long>(m.tn),
              static_cast<long long>(m.fn));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSEM sentence-encoder FAQ retrieval"};
  app.require_subcommand(1);

  // stats
  std::string stats_pairs;
  auto* stats = app.add_subcommand("stats", "overlap-rate statistics of a pair TSV");
  stats->add_option("--pairs", stats_pairs, "pair TSV (q1<TAB>q2<TAB>label)")->required();

  // train
  std::string train_path, val_path, emb_path, train_out = "model.msem";
  msem::EncoderConfig enc_cfg;
  msem::TrainConfig train_cfg;
  int min_count = 1, min_cluster_size = 4;
  double gamma = 10.0, alpha = 0.5;
  auto* train = app.add_subcommand("train", "train the encoder on a pair TSV");
  train->add_option("--train", train_path, "training pair TSV")->required();
  train->add_option("--val", val_path, "validation pair TSV (defaults to train)");
  train->add_option("--embeddings", emb_path, "pretrained word vectors (text format)");
  train->add_option("--out", train_out, "output checkpoint path");
  add_encoder_flags(train, enc_cfg);
  train->add_option("--lambda", train_cfg.lambda, "matching-loss weight");
  train->add_option("--epochs", train_cfg.max_epochs, "maximum epochs");
  train->add_option("--batch-size", train_cfg.batch_size, "mini-batch size");
  train->add_option("--adam-lr", train_cfg.adam_lr, "Adam learning rate");
  train->add_option("--sgd-lr", train_cfg.sgd_lr, "SGD learning rate (second phase)");
  train->add_option("--patience", train_cfg.patience, "non-improving evals before phase change");
  train->add_option("--eval-every", train_cfg.eval_every, "steps between evaluations");
  train->add_option("--seed", train_cfg.seed, "run seed");
  train->add_option("--min-count", min_count, "vocabulary frequency cutoff");
  train->add_option("--min-cluster-size", min_cluster_size, "intent cluster size threshold");
  train->add_option("--gamma", gamma, "matching head scale");
  train->add_option("--alpha", alpha, "matching head offset");

  // encode
  std::string enc_ckpt, enc_text;
  auto* enc = app.add_subcommand("encode", "print the vector for one sentence");
  enc->add_option("--checkpoint", enc_ckpt, "model checkpoint")->required();
  enc->add_option("--text", enc_text, "sentence to encode")->required();

  // index-build
  std::string ib_faq, ib_ckpt, ib_out;
  msem::IndexParams index_params;
  auto* ib = app.add_subcommand("index-build", "encode a FAQ TSV and build the ANN index");
  ib->add_option("--faq", ib_faq, "FAQ TSV (id<TAB>question<TAB>answer)")->required();
  ib->add_option("--checkpoint", ib_ckpt, "model checkpoint")->required();
  ib->add_option("--out", ib_out, "artifact output directory")->required();
  ib->add_option("--trees", index_params.num_trees, "number of trees");
  ib->add_option("--leaf", index_params.leaf_capacity, "leaf capacity");
  ib->add_option("--seed", index_params.seed, "index build seed");

  // query
  std::string q_dir, q_text;
  int64_t q_k = 5;
  double q_min_score = 0.0;
  auto* query = app.add_subcommand("query", "ranked lookup against built artifacts");
  query->add_option("--artifacts", q_dir, "artifact directory")->required();
  query->add_option("--text", q_text, "query text")->required();
  query->add_option("-k,--topk", q_k, "results to return");
  auto* min_score_opt =
      query->add_option("--min-score", q_min_score, "drop results scoring below this");

  // serve
  std::string s_dir, s_bind = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "JSON-over-HTTP retrieval service");
  serve->add_option("--artifacts", s_dir, "artifact directory")->required();
  serve->add_option("--bind", s_bind, "host:port to listen on");

  // eval
  std::string ev_ckpt, ev_pairs;
  double ev_threshold = 0.5;
  auto* ev = app.add_subcommand("eval", "metrics on a labeled pair TSV");
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--pairs", ev_pairs, "pair TSV")->required();
  ev->add_option("--threshold", ev_threshold, "match decision threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (stats->parsed()) return cmd_stats(stats_pairs);
    if (train->parsed())
      return cmd_train(train_path, val_path, emb_path, train_out, enc_cfg, train_cfg, min_count,
                       min_cluster_size, gamma, alpha);
    if (enc->parsed()) return cmd_encode(enc_ckpt, enc_text);
    if (ib->parsed()) return cmd_index_build(ib_faq, ib_ckpt, ib_out, index_params);
    if (query->parsed())
      return cmd_query(q_dir, q_text, q_k, q_min_score, min_score_opt->count() > 0);
    if (serve->parsed()) return cmd_serve(s_dir, s_bind);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_pairs, ev_threshold);
  } catch (const msem::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
