#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <optional>

#include "lcsum/baselines.hpp"
#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"
#include "lcsum/inference.hpp"
#include "lcsum/knapsack_net.hpp"
#include "lcsum/simulator.hpp"
#include "lcsum/summarizer.hpp"
#include "lcsum/synth.hpp"

namespace fs = std::filesystem;

namespace lcsum::cli {

Command* Registry::selected(const CLI::App&) const {
  for (const auto& c : commands_) {
    if (c->app != nullptr && c->app->parsed()) return c.get();
  }
  return nullptr;
}

namespace {

// Every option of `app` with its effective value.
nlohmann::json config_snapshot(const CLI::App& app) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (key == "help" || key == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[key] = opt->get_items_expected_max() > 1 ? nlohmann::json(r) : nlohmann::json(r.back());
    } else {
      j[key] = opt->get_default_str();
    }
  }
  return j;
}

void add_config_option(CLI::App* sub) {
  sub->add_option("--config", "Flat JSON file of flag values; explicit flags win");
}

// Manifest beside a file output: <file>.manifest.json.
fs::path sidecar(const fs::path& file) { return fs::path(file.string() + ".manifest.json"); }

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void write_json(const fs::path& file, const nlohmann::json& j) { write_text_atomic(file, j.dump(2) + "\n"); }

std::unique_ptr<SentenceEncoder> build_encoder(const std::string& type, int dim, std::uint64_t seed,
                                               const std::string& embeddings, const std::vector<Document>& fit_on) {
  if (type == "hashed") return std::make_unique<HashedBowEncoder>(dim, seed);
  if (type == "tfidf") {
    auto enc = std::make_unique<TfidfEncoder>(dim, seed);
    enc->fit(fit_on);
    return enc;
  }
  if (type == "external") {
    if (embeddings.empty()) throw ContractError("--encoder external requires --embeddings DIR");
    return std::make_unique<ExternalEncoder>(embeddings, dim);
  }
  throw ContractError("unknown encoder: " + type);
}

class Simulate : public Command {
 public:
  std::string name() const override { return "simulate"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Generate labelled knapsack instances");
    add_config_option(app);
    app->add_option("--dataset", dataset_, "cnewsum|cnndm|custom")->check(CLI::IsMember({"cnewsum", "cnndm", "custom"}));
    app->add_option("--count", count_, "Number of instances")->required();
    app->add_option("--solver", solver_, "dp|greedy")->check(CLI::IsMember({"dp", "greedy"}));
    app->add_option("--seed", seed_);
    app->add_option("--lambda", lambda_, "Poisson mean sentence count (custom)");
    app->add_option("--mean-len", mean_len_, "Mean sentence length in characters (custom)");
    app->add_option("--capacities", capacities_, "Target capacities (custom)")->delimiter(',');
    app->add_option("--out", out_, "Output directory")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.set_seed(seed_);
    SimulatorParams p;
    if (dataset_ == "cnewsum") {
      p = SimulatorParams::cnewsum(seed_);
    } else if (dataset_ == "cnndm") {
      p = SimulatorParams::cnndm(seed_);
    } else {
      if (!lambda_ || !mean_len_ || capacities_.empty()) {
        throw ContractError("--dataset custom requires --lambda, --mean-len and --capacities");
      }
      p.lambda_sentences = *lambda_;
      p.mean_sentence_length = *mean_len_;
      p.target_capacities = capacities_;
      p.seed = seed_;
    }
    LCSUM_REQUIRE(count_ >= 1, "--count must be positive");
    const auto paths = generate_dataset(count_, p, parse_knapsack_solver(solver_), out_);
    spdlog::info("wrote {} and {}", paths.train.string(), paths.valid.string());
    manifest.add_output(out_);
  }

 private:
  std::string dataset_ = "cnewsum";
  std::size_t count_ = 0;
  std::string solver_ = "dp";
  std::uint64_t seed_ = 42;
  std::optional<double> lambda_, mean_len_;
  std::vector<std::int64_t> capacities_;
  fs::path out_;
};

class KnapsackTrain : public Command {
 public:
  std::string name() const override { return "knapsack-train"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Train the knapsack approximator");
    add_config_option(app);
    app->add_option("--train", train_, "Training JSONL")->required();
    app->add_option("--valid", valid_, "Validation JSONL")->required();
    app->add_option("--layers", net_.layers);
    app->add_option("--heads", net_.heads);
    app->add_option("--width", net_.width);
    app->add_option("--ffn", net_.ffn);
    app->add_option("--epochs", opts_.epochs);
    app->add_option("--lr", opts_.lr);
    app->add_option("--batch", opts_.batch_size);
    app->add_option("--warmup", opts_.warmup_steps, "Linear warm-up steps");
    app->add_option("--final-lr-fraction", opts_.final_lr_fraction);
    app->add_option("--seed", seed_);
    app->add_option("--out", out_, "Output directory")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.set_seed(seed_);
    manifest.add_input(train_);
    manifest.add_input(valid_);
    const auto train = load_dataset(train_);
    const auto valid = load_dataset(valid_);
    LCSUM_REQUIRE(!train.empty() && !valid.empty(), "training and validation sets must be non-empty");
    const KnapsackSolver labels = train.front().solver;
    for (const auto& r : train) {
      LCSUM_REQUIRE(r.solver == labels, "training records mix label solvers");
    }
    net_.seed = seed_;
    opts_.seed = seed_;
    opts_.on_log = [](int epoch, long step, double loss) {
      spdlog::info("epoch {} step {} loss {:.5f}", epoch, step, loss);
    };
    KnapsackNet net(net_);
    const auto report = train_knapsack_net(net, train, valid, opts_);
    const auto metrics = evaluate_knapsack_net(net, valid);
    fs::create_directories(out_);
    net.save(out_ / "model", {{"labels", to_string(labels)}});
    write_json(out_ / "report.json", {{"labels", to_string(labels)},
                                      {"steps", report.steps},
                                      {"initial_val_loss", report.initial_val_loss},
                                      {"final_val_loss", report.final_val_loss},
                                      {"epoch_val_loss", report.epoch_val_loss},
                                      {"error_rate", metrics.error_rate},
                                      {"matched_rate", metrics.matched_rate}});
    spdlog::info("validation error {:.4f} matched {:.4f}", metrics.error_rate, metrics.matched_rate);
    manifest.add_output(out_);
  }

 private:
  fs::path train_, valid_, out_;
  KnapsackNetConfig net_;
  KnapsackTrainOptions opts_ = defaults();
  std::uint64_t seed_ = 42;

  static KnapsackTrainOptions defaults() {
    KnapsackTrainOptions o;
    o.lr = 1e-3;
    o.warmup_steps = 200;
    o.final_lr_fraction = 0.1;
    return o;
  }
};

class KnapsackEval : public Command {
 public:
  std::string name() const override { return "knapsack-eval"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Score a knapsack approximator against solver labels");
    add_config_option(app);
    app->add_option("--ckpt", ckpt_, "Checkpoint directory")->required();
    app->add_option("--data", data_, "Labelled JSONL")->required();
    app->add_option("--out", out_, "Output directory")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.add_input(ckpt_);
    manifest.add_input(data_);
    const KnapsackNet net = KnapsackNet::load(ckpt_);
    const auto records = load_dataset(data_);
    LCSUM_REQUIRE(!records.empty(), "evaluation set is empty");
    const auto metrics = evaluate_knapsack_net(net, records);
    fs::create_directories(out_);
    write_json(out_ / "metrics.json", {{"instances", records.size()},
                                       {"error_rate", metrics.error_rate},
                                       {"matched_rate", metrics.matched_rate},
                                       {"val_loss", knapsack_val_loss(net, records)}});
    spdlog::info("error {:.4f} matched {:.4f}", metrics.error_rate, metrics.matched_rate);
    manifest.add_output(out_);
  }

 private:
  fs::path ckpt_, data_, out_;
};

class SumTrain : public Command {
 public:
  std::string name() const override { return "sum-train"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Train the sentence scorer");
    add_config_option(app);
    app->add_option("--corpus", corpus_, "Training corpus JSONL")->required();
    app->add_option("--valid", valid_, "Validation corpus JSONL");
    app->add_option("--valid-fraction", valid_fraction_, "Held-out tail of --corpus when --valid is absent");
    app->add_option("--encoder", encoder_, "hashed|tfidf|external")
        ->check(CLI::IsMember({"hashed", "tfidf", "external"}));
    app->add_option("--dim", dim_, "Sentence embedding width");
    app->add_option("--encoder-seed", encoder_seed_);
    app->add_option("--embeddings", embeddings_, "Directory of <id>.emb files (external encoder)");
    app->add_option("--scorer-layers", cfg_.scorer.layers);
    app->add_option("--scorer-heads", cfg_.scorer.heads);
    app->add_option("--scorer-hidden", cfg_.scorer.hidden);
    app->add_option("--scorer-ffn", cfg_.scorer.ffn);
    app->add_flag("--scorer-positions,!--no-scorer-positions", cfg_.scorer.positions);
    app->add_option("--max-sentences", cfg_.scorer.max_sentences);
    app->add_option("--critic-layers", critic_.layers);
    app->add_option("--critic-heads", critic_.heads);
    app->add_option("--critic-hidden", critic_.width);
    app->add_option("--critic-ffn", critic_.ffn);
    app->add_flag("--predictor-positions,!--no-predictor-positions", cfg_.contrastive.predictor_positions);
    app->add_option("--target", cfg_.contrastive.target, "encoder|input")
        ->check(CLI::IsMember({"encoder", "input"}));
    app->add_option("--lambda1", cfg_.contrastive.lambda1);
    app->add_option("--lambda2", cfg_.contrastive.lambda2);
    app->add_option("--m", cfg_.contrastive.m, "Sentences extracted per document");
    app->add_option("--mode", mode_, "topk|knapsack")->check(CLI::IsMember({"topk", "knapsack"}));
    app->add_option("--knapsack-ckpt", knapsack_ckpt_, "Frozen knapsack approximator (knapsack mode)");
    app->add_option("--capacities", opts_.capacities, "Character budgets sampled per document")->delimiter(',');
    app->add_option("--lr", opts_.lr);
    app->add_option("--lr-pretrained", opts_.lr_pretrained, "Learning rate of warmed-up critic weights");
    app->add_option("--batch", opts_.batch_size);
    app->add_option("--steps", opts_.steps);
    app->add_option("--val-every", opts_.val_every);
    app->add_option("--warmup-steps", warmup_steps_, "Critic warm-up steps before scorer training");
    app->add_option("--warmup-lr", warmup_lr_);
    app->add_option("--seed", seed_);
    app->add_option("--out", out_, "Output directory")->required();
  }

  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.set_seed(seed_);
    manifest.add_input(corpus_);
    if (!valid_.empty()) manifest.add_input(valid_);
    if (!knapsack_ckpt_.empty()) manifest.add_input(knapsack_ckpt_);

    auto docs = load_corpus(corpus_);
    std::vector<Document> valid_docs;
    if (!valid_.empty()) {
      valid_docs = load_corpus(valid_);
    } else {
      LCSUM_REQUIRE(valid_fraction_ > 0 && valid_fraction_ < 1, "--valid-fraction must be in (0, 1)");
      const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(valid_fraction_ * static_cast<double>(docs.size())));
      LCSUM_REQUIRE(held < docs.size(), "corpus too small to hold out a validation split");
      valid_docs.assign(docs.end() - static_cast<std::ptrdiff_t>(held), docs.end());
      docs.resize(docs.size() - held);
    }
    const auto encoder = build_encoder(encoder_, dim_, encoder_seed_, embeddings_, docs);
    const auto train = encode_corpus(docs, *encoder);
    const auto valid = encode_corpus(valid_docs, *encoder);

    cfg_.input_dim = encoder->dim();
    cfg_.contrastive.encoder = critic_;
    cfg_.contrastive.predictor = critic_;
    cfg_.sentence_encoder = encoder->to_json();
    cfg_.seed = seed_;
    Summarizer model(cfg_);

    opts_.seed = seed_;
    opts_.mode = parse_selection_mode(mode_);
    opts_.out_dir = out_;
    opts_.checkpoint_extra = {{"mode", mode_}};
    std::optional<KnapsackNet> net;
    if (opts_.mode == SelectionMode::kKnapsack) {
      if (knapsack_ckpt_.empty()) throw ContractError("--mode knapsack requires --knapsack-ckpt");
      LCSUM_REQUIRE(!opts_.capacities.empty(), "--mode knapsack requires --capacities");
      const auto kcfg = load_checkpoint_config(knapsack_ckpt_);
      net.emplace(KnapsackNet::load(knapsack_ckpt_));
      net->params().set_trainable(false);
      opts_.knapsack = &*net;
      opts_.checkpoint_extra["knapsack_labels"] = kcfg.value("labels", "dp");
      opts_.checkpoint_extra["knapsack_ckpt"] = knapsack_ckpt_.string();
    }

    nlohmann::json warmup = nullptr;
    if (warmup_steps_ > 0) {
      spdlog::info("critic warm-up for {} steps", warmup_steps_);
      const auto w = warm_up_critic(model, train, valid, warmup_steps_, warmup_lr_, opts_.batch_size, seed_);
      warmup = {{"steps", warmup_steps_}, {"initial_val_loss", w.initial_val_loss}, {"final_val_loss", w.final_val_loss}};
      opts_.pretrained = critic_parameters(model);
    }

    const auto report = train_summarizer(model, train, valid, opts_);
    model.save(out_ / "final", opts_.checkpoint_extra);
    nlohmann::json best = nlohmann::json::array();
    for (const auto& e : report.best) best.push_back({{"step", e.step}, {"val_loss", e.val_loss}, {"dir", e.dir.filename().string()}});
    write_json(out_ / "report.json", {{"initial_val_loss", report.initial_val_loss},
                                      {"final_val_loss", report.final_val_loss},
                                      {"best", best},
                                      {"warmup", warmup},
                                      {"train_documents", train.size()},
                                      {"valid_documents", valid.size()}});
    manifest.add_output(out_);
  }

 private:
  fs::path corpus_, valid_, knapsack_ckpt_, out_;
  double valid_fraction_ = 0.1;
  std::string encoder_ = "hashed";
  int dim_ = 512;
  std::uint64_t encoder_seed_ = 7;
  std::string embeddings_;
  SummarizerConfig cfg_;
  TransformerConfig critic_ = ContrastiveConfig{}.encoder;
  std::string mode_ = "topk";
  SumTrainOptions opts_;
  long warmup_steps_ = 0;
  double warmup_lr_ = 1e-3;
  std::uint64_t seed_ = 42;
};

class Summarize : public Command {
 public:
  std::string name() const override { return "summarize"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Extract summaries with a trained scorer");
    add_config_option(app);
    app->add_option("--corpus", corpus_, "Corpus JSONL")->required();
    app->add_option("--ckpt", ckpt_, "Scorer checkpoint directory")->required();
    app->add_option("--mode", mode_, "topk|length")->check(CLI::IsMember({"topk", "length"}));
    app->add_option("--m", m_, "Sentences per summary (topk)");
    app->add_option("--capacity", capacity_, "Character budget (length)");
    app->add_option("--pipeline", pipeline_, "dp|kt_dp|kt_den")->check(CLI::IsMember({"dp", "kt_dp", "kt_den"}));
    app->add_option("--profit", profit_, "minshift|sigmoid")->check(CLI::IsMember({"minshift", "sigmoid"}));
    app->add_option("--embeddings", embeddings_, "Overrides the external encoder directory");
    app->add_option("--out", out_, "Output JSONL")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(sidecar(out_));
    manifest.set_config(config_snapshot(*app));
    manifest.add_input(corpus_);
    manifest.add_input(ckpt_);
    const auto docs = load_corpus(corpus_);
    const Summarizer model = Summarizer::load(ckpt_);
    nlohmann::json enc_json = model.config().sentence_encoder;
    if (enc_json.is_null()) throw ContractError("checkpoint does not record its sentence encoder");
    if (!embeddings_.empty()) enc_json["dir"] = embeddings_;
    const auto encoder = make_encoder(enc_json);

    std::vector<SummaryResult> results;
    results.reserve(docs.size());
    if (mode_ == "topk") {
      LCSUM_REQUIRE(m_ >= 1, "--m must be positive");
      for (const auto& d : docs) results.push_back(extract_topk(d, encoder->encode(d), model, m_));
    } else {
      if (!capacity_) throw ContractError("--mode length requires --capacity");
      LCSUM_REQUIRE(*capacity_ >= 0, "--capacity must be non-negative");
      const Pipeline pipeline = parse_pipeline(pipeline_);
      require_pipeline_checkpoint(load_checkpoint_config(ckpt_), pipeline);
      const auto transform = profit_ == "sigmoid" ? ProfitTransform::kSigmoid : ProfitTransform::kMinShift;
      for (const auto& d : docs) {
        results.push_back(extract_length_controlled(d, encoder->encode(d), model, *capacity_, pipeline, transform));
      }
    }
    ensure_parent(out_);
    save_summaries(out_, results);
    spdlog::info("wrote {} summaries to {}", results.size(), out_.string());
    manifest.add_output(out_);
  }

 private:
  fs::path corpus_, ckpt_, out_;
  std::string mode_ = "topk";
  int m_ = 3;
  std::optional<std::int64_t> capacity_;
  std::string pipeline_ = "dp";
  std::string profit_ = "minshift";
  std::string embeddings_;
};

void write_reports(const fs::path& out, std::span<const CorpusReport> reports) {
  fs::create_directories(out);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(r.to_json());
  write_json(out / "report.json", arr);
  write_text_atomic(out / "table.txt", render_table(reports));
}

class Evaluate : public Command {
 public:
  std::string name() const override { return "evaluate"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "ROUGE reports for summary files");
    add_config_option(app);
    app->add_option("--corpus", corpus_, "Corpus JSONL with references")->required();
    app->add_option("--summaries", summaries_, "Summary JSONL files")->required()->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app->add_flag("--length-controlled", length_controlled_, "Report length mean and deviation");
    app->add_flag("--char-unigrams", char_unigrams_, "Tokenise non-ASCII text per character");
    app->add_option("--out", out_, "Output directory")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.add_input(corpus_);
    const auto docs = load_corpus(corpus_);
    std::vector<CorpusReport> reports;
    for (const auto& file : summaries_) {
      manifest.add_input(file);
      const auto results = load_summaries(file);
      auto r = evaluate_corpus(results, docs, length_controlled_, char_unigrams_);
      if (r.pipeline.empty()) r.pipeline = file.stem().string();
      reports.push_back(std::move(r));
    }
    write_reports(out_, reports);
    manifest.add_output(out_);
  }

 private:
  fs::path corpus_, out_;
  std::vector<fs::path> summaries_;
  bool length_controlled_ = false;
  bool char_unigrams_ = false;
};

class Baseline : public Command {
 public:
  std::string name() const override { return "baseline"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Run a reference extractor and score it");
    add_config_option(app);
    app->add_option("--corpus", corpus_, "Corpus JSONL")->required();
    app->add_option("--method", method_, "lead|textrank|oracle")
        ->check(CLI::IsMember({"lead", "textrank", "oracle"}));
    app->add_option("--m", m_, "Sentences per summary");
    app->add_option("--capacity", capacity_, "Character budget (textrank only)");
    app->add_option("--variant", variant_, "degree|pagerank")->check(CLI::IsMember({"degree", "pagerank"}));
    app->add_option("--encoder", encoder_, "hashed|tfidf|external")
        ->check(CLI::IsMember({"hashed", "tfidf", "external"}));
    app->add_option("--dim", dim_);
    app->add_option("--encoder-seed", encoder_seed_);
    app->add_option("--embeddings", embeddings_, "Directory of <id>.emb files (external encoder)");
    app->add_flag("--char-unigrams", char_unigrams_, "Tokenise non-ASCII text per character");
    app->add_option("--out", out_, "Output directory")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(out_ / "manifest.json");
    manifest.set_config(config_snapshot(*app));
    manifest.add_input(corpus_);
    const auto docs = load_corpus(corpus_);
    LCSUM_REQUIRE(m_ >= 1, "--m must be positive");
    if (capacity_ && method_ != "textrank") throw ContractError("--capacity applies to --method textrank only");
    std::unique_ptr<SentenceEncoder> encoder;
    if (method_ == "textrank") encoder = build_encoder(encoder_, dim_, encoder_seed_, embeddings_, docs);
    const auto variant = parse_textrank_variant(variant_);

    std::vector<SummaryResult> results;
    results.reserve(docs.size());
    for (const auto& d : docs) {
      if (method_ == "lead") {
        results.push_back(lead_k(d, m_));
      } else if (method_ == "oracle") {
        results.push_back(oracle_extract(d, m_, char_unigrams_));
      } else if (capacity_) {
        results.push_back(textrank_length_controlled(d, encoder->encode(d), *capacity_, variant));
      } else {
        results.push_back(textrank(d, encoder->encode(d), m_, variant));
      }
    }
    fs::create_directories(out_);
    save_summaries(out_ / "summaries.jsonl", results);
    const std::vector<CorpusReport> reports{evaluate_corpus(results, docs, capacity_.has_value(), char_unigrams_)};
    write_reports(out_, reports);
    manifest.add_output(out_);
  }

 private:
  fs::path corpus_, out_;
  std::string method_ = "lead";
  int m_ = 3;
  std::optional<std::int64_t> capacity_;
  std::string variant_ = "degree";
  std::string encoder_ = "hashed";
  int dim_ = 512;
  std::uint64_t encoder_seed_ = 7;
  std::string embeddings_;
  bool char_unigrams_ = false;
};

class SynthCorpus : public Command {
 public:
  std::string name() const override { return "synth-corpus"; }
  void attach(CLI::App& parent) override {
    app = parent.add_subcommand(name(), "Write a synthetic corpus with planted key sentences");
    add_config_option(app);
    app->add_option("--docs", opts_.docs);
    app->add_option("--seed", opts_.seed);
    app->add_option("--planted", opts_.planted);
    app->add_option("--min-sentences", opts_.min_sentences);
    app->add_option("--max-sentences", opts_.max_sentences);
    app->add_option("--topic-words", opts_.topic_words);
    app->add_option("--topic-pool", opts_.topic_pool);
    app->add_option("--topic-share", opts_.topic_share);
    app->add_option("--distractor-topic-rate", opts_.distractor_topic_rate);
    app->add_option("--out", out_, "Output JSONL")->required();
  }
  void run(RunManifest& manifest) override {
    manifest.set_location(sidecar(out_));
    manifest.set_config(config_snapshot(*app));
    manifest.set_seed(opts_.seed);
    const auto docs = synth_corpus(opts_);
    ensure_parent(out_);
    save_corpus(out_, docs);
    spdlog::info("wrote {} documents to {}", docs.size(), out_.string());
    manifest.add_output(out_);
  }

 private:
  SynthCorpusOptions opts_;
  fs::path out_;
};

}  // namespace

void register_commands(CLI::App& app, Registry& registry) {
  std::vector<std::unique_ptr<Command>> all;
  all.push_back(std::make_unique<Simulate>());
  all.push_back(std::make_unique<KnapsackTrain>());
  all.push_back(std::make_unique<KnapsackEval>());
  all.push_back(std::make_unique<SumTrain>());
  all.push_back(std::make_unique<Summarize>());
  all.push_back(std::make_unique<Evaluate>());
  all.push_back(std::make_unique<Baseline>());
  all.push_back(std::make_unique<SynthCorpus>());
  for (auto& c : all) {
    c->attach(app);
    registry.add(std::move(c));
  }
}

}  // namespace lcsum::cli
