#include "mlbalance/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "mlbalance/error.hpp"
#include "mlbalance/evaluation.hpp"
#include "mlbalance/imbalance.hpp"
#include "mlbalance/random.hpp"
#include "mlbalance/sampler.hpp"

namespace mlbalance {

using nlohmann::json;

json RunConfig::to_json() const {
  json j = {{"input", input},
            {"labels", labels},
            {"label_count", label_count},
            {"format", format},
            {"out", out},
            {"model", model},
            {"test", test},
            {"sampler", sampler},
            {"classifier", classifier},
            {"k", k},
            {"smote_k", smote_k},
            {"val_frac", val_frac},
            {"test_frac", test_frac},
            {"seed", seed},
            {"p", p},
            {"imr_threshold", imr_threshold},
            {"max_attempts", max_attempts},
            {"epochs_br", br_epochs},
            {"br_reg", br_reg}};
  const json train_json = train.to_json();
  for (const auto& [key, value] : train_json.items()) {
    if (key != "seed") j[key] = value;
  }
  return j;
}

void RunConfig::merge_json(const json& source) {
  if (!source.is_object()) throw ConfigError("config file must hold a JSON object");
  const json& j = source.contains("config") && source["config"].is_object() ? source["config"]
                                                                            : source;
  input = j.value("input", input);
  labels = j.value("labels", labels);
  label_count = j.value("label_count", label_count);
  format = j.value("format", format);
  out = j.value("out", out);
  model = j.value("model", model);
  test = j.value("test", test);
  sampler = j.value("sampler", sampler);
  classifier = j.value("classifier", classifier);
  k = j.value("k", k);
  smote_k = j.value("smote_k", smote_k);
  val_frac = j.value("val_frac", val_frac);
  test_frac = j.value("test_frac", test_frac);
  seed = j.value("seed", seed);
  p = j.value("p", p);
  imr_threshold = j.value("imr_threshold", imr_threshold);
  max_attempts = j.value("max_attempts", max_attempts);
  br_epochs = j.value("epochs_br", br_epochs);
  br_reg = j.value("br_reg", br_reg);
  json train_json = train.to_json();
  for (auto& [key, value] : train_json.items()) {
    if (key != "seed" && j.contains(key)) value = j[key];
  }
  train = TrainConfig::from_json(train_json);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

DatasetFormat resolve_format(const RunConfig& cfg, const std::string& path) {
  if (!cfg.format.empty()) return parse_format(cfg.format);
  if (ends_with(path, ".arff")) return DatasetFormat::kArff;
  if (ends_with(path, ".csv")) return DatasetFormat::kCsv;
  throw ConfigError("cannot infer the format of '" + path + "'; pass --format");
}

std::vector<std::string> label_names_from(const std::string& labels) {
  if (ends_with(labels, ".xml")) return parse_mulan_labels_xml(read_text_file(labels));
  std::vector<std::string> names;
  std::stringstream ss(labels);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) names.push_back(name);
  }
  return names;
}

MultiLabelDataset load_dataset(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) throw ConfigError("no input dataset given (--input)");
  const DatasetFormat format = resolve_format(cfg, path);
  if (format == DatasetFormat::kArff) {
    if (cfg.labels.empty()) throw ConfigError("ARFF input needs --labels (XML file or names)");
    const auto names = label_names_from(cfg.labels);
    if (names.empty()) throw ConfigError("label list '" + cfg.labels + "' is empty");
    return parse_arff(read_text_file(path), names);
  }
  Index count = cfg.label_count;
  if (count <= 0 && !cfg.labels.empty()) count = static_cast<Index>(label_names_from(cfg.labels).size());
  if (count <= 0) throw ConfigError("CSV input needs --label-count or --labels");
  return parse_dense_csv(read_text_file(path), count);
}

std::filesystem::path output_dir(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("this command needs an output directory (--out)");
  std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json names_of(const std::vector<std::size_t>& indices, const std::vector<std::string>& names) {
  json out = json::array();
  for (std::size_t i : indices) out.push_back(names[i]);
  return out;
}

json profile_json(const MultiLabelDataset& ds, double imr_threshold) {
  const ImbalanceProfile profile = compute_profile(ds);
  json per_label = json::array();
  for (std::size_t j = 0; j < profile.num_labels(); ++j) {
    per_label.push_back({{"name", ds.label_names()[j]},
                         {"n1", profile.n1[j]},
                         {"n0", profile.n0[j]},
                         {"irlbl", finite_or_null(profile.irlbl[j])},
                         {"imr", finite_or_null(profile.imr[j])}});
  }
  return {{"n", ds.num_instances()},
          {"d", ds.num_features()},
          {"q", ds.num_labels()},
          {"card", profile.card},
          {"den", profile.den},
          {"mean_ir", profile.mean_ir},
          {"cvir", profile.cvir},
          {"imr_threshold", imr_threshold},
          {"minority_labels",
           names_of(minority_labels(profile, imr_threshold), ds.label_names())},
          {"per_label", per_label}};
}

std::unique_ptr<Classifier> fit_classifier(const RunConfig& cfg, const MultiLabelDataset& train) {
  if (cfg.classifier == "br") {
    BinaryRelevanceConfig br{cfg.br_reg, cfg.br_epochs, derive_seed(cfg.seed, "classifier")};
    return std::make_unique<BinaryRelevance>(BinaryRelevance::train(train, br));
  }
  if (cfg.classifier == "mlknn") {
    if (cfg.k < 1) throw ConfigError("--k must be positive");
    return std::make_unique<MLkNN>(MLkNN::train(train, static_cast<std::size_t>(cfg.k)));
  }
  throw ConfigError("unknown classifier '" + cfg.classifier + "' (expected br or mlknn)");
}

struct SampleOutcome {
  MultiLabelDataset dataset;
  json provenance;
  long long appended = 0;
  long long removed = 0;
};

void require_minority(const MultiLabelDataset& ds, double imr_threshold) {
  if (minority_labels(compute_profile(ds), imr_threshold).empty()) {
    throw NothingToSampleError("no minority label satisfies ImR > " +
                               std::to_string(imr_threshold) +
                               " and IRlbl > MeanIR; nothing to oversample");
  }
}

// `model` is only read for the aemlo sampler.
SampleOutcome run_sampler(const RunConfig& cfg, const MultiLabelDataset& ds,
                          const AemloModel* model) {
  const std::uint64_t seed = derive_seed(cfg.seed, "sampler");
  json prov = {{"method", cfg.sampler}, {"p", cfg.p}, {"seed", cfg.seed},
               {"sampler_seed", seed}};
  if (cfg.sampler == "none") {
    prov.update({{"num", 0}, {"accepted", 0}, {"rejected_all_zero", 0},
                 {"minority_labels", json::array()}});
    return {ds, prov, 0, 0};
  }
  if (cfg.sampler == "aemlo") {
    if (model == nullptr) throw ConfigError("the aemlo sampler needs a trained model (--model)");
    SamplingConfig sc{cfg.p, cfg.imr_threshold, cfg.max_attempts, seed};
    GenerationResult gen = generate(*model, ds, sc);
    prov.update({{"num", gen.requested},
                 {"accepted", gen.instances.size()},
                 {"rejected_all_zero", gen.rejected_all_zero},
                 {"attempts", gen.attempts},
                 {"minority_labels", names_of(gen.minority_labels, ds.label_names())}});
    json seeds = json::array();
    for (const auto& s : gen.instances) seeds.push_back(s.seed_index);
    prov["seed_indices"] = seeds;
    const auto appended = static_cast<long long>(gen.instances.size());
    return {augment(ds, gen.instances), prov, appended, 0};
  }
  if (cfg.sampler == "mlros") {
    require_minority(ds, cfg.imr_threshold);
    ResampleResult r = mlros(ds, cfg.p, cfg.imr_threshold, seed);
    const auto appended = static_cast<long long>(r.source_rows.size());
    prov.update({{"num", appended},
                 {"accepted", appended},
                 {"rejected_all_zero", 0},
                 {"minority_labels", names_of(r.minority_labels, ds.label_names())},
                 {"source_rows", r.source_rows}});
    return {std::move(r.dataset), prov, appended, 0};
  }
  if (cfg.sampler == "mlrus") {
    ResampleResult r = mlrus(ds, cfg.p, cfg.imr_threshold, seed);
    const auto removed = static_cast<long long>(r.source_rows.size());
    prov.update({{"num", removed},
                 {"accepted", 0},
                 {"removed", removed},
                 {"rejected_all_zero", 0},
                 {"minority_labels", names_of(r.minority_labels, ds.label_names())},
                 {"removed_rows", r.source_rows}});
    return {std::move(r.dataset), prov, 0, removed};
  }
  if (cfg.sampler == "mlsmote") {
    require_minority(ds, cfg.imr_threshold);
    if (cfg.smote_k < 1) throw ConfigError("--smote-k must be positive");
    SmoteResult r = mlsmote(ds, static_cast<std::size_t>(cfg.smote_k), cfg.imr_threshold, seed);
    const auto appended = static_cast<long long>(r.instances.size());
    prov.update({{"num", appended},
                 {"accepted", appended},
                 {"rejected_all_zero", 0},
                 {"k", cfg.smote_k},
                 {"minority_labels", names_of(r.minority_labels, ds.label_names())}});
    return {std::move(r.dataset), prov, appended, 0};
  }
  throw ConfigError("unknown sampler '" + cfg.sampler +
                    "' (expected aemlo, mlros, mlrus, mlsmote or none)");
}

TrainConfig train_config_for(const RunConfig& cfg, const MultiLabelDataset& train_set) {
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  return tc.resolved(train_set.num_instances(), train_set.num_labels());
}

// Materializes the defaults that depend on the data so the emitted config replays exactly.
RunConfig resolved(RunConfig cfg, const std::string& path, const MultiLabelDataset& train_set) {
  cfg.format = std::string(format_name(resolve_format(cfg, path)));
  TrainConfig tc = train_config_for(cfg, train_set);
  tc.seed = cfg.train.seed;
  cfg.train = tc;
  return cfg;
}

void write_augmented(const std::filesystem::path& dir, const RunConfig& cfg,
                     const MultiLabelDataset& ds) {
  const DatasetFormat format = resolve_format(cfg, cfg.input);
  const std::string name = "augmented." + std::string(format_name(format));
  write_text_file((dir / name).string(), write_dataset(ds, format));
  if (format == DatasetFormat::kArff) {
    write_text_file((dir / "labels.xml").string(), write_mulan_labels_xml(ds.label_names()));
  }
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  const MultiLabelDataset ds = load_dataset(cfg, cfg.input);
  const json report = profile_json(ds, cfg.imr_threshold);
  if (cfg.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    write_json(cfg.out, report);
  }
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const MultiLabelDataset ds = load_dataset(cfg, cfg.input);
  const auto dir = output_dir(cfg);
  const DatasetSplit parts = split(ds, cfg.val_frac, cfg.test_frac, derive_seed(cfg.seed, "split"));
  const auto [train_set, scaler] = normalize_features(parts.train);
  const MultiLabelDataset validation = scaler.transform(parts.validation);
  const TrainResult result = train(train_set, validation, train_config_for(cfg, train_set), scaler);

  write_text_file((dir / "model.json").string(), save_model(result.model));
  write_text_file((dir / "loss_log.csv").string(), loss_log_csv(result.history));
  write_json(dir / "resolved_config.json", resolved(cfg, cfg.input, train_set).to_json());
  const EpochLog& last = result.history.back();
  out << "trained " << result.history.size() << " epochs on " << train_set.num_instances()
      << " instances; final loss " << last.total << ", validation macro F1 "
      << last.mean_val_f1 << "\n";
  return kExitOk;
}

int cmd_sample(const RunConfig& cfg, std::ostream& out) {
  const MultiLabelDataset ds = load_dataset(cfg, cfg.input);
  std::optional<AemloModel> model;
  if (cfg.sampler == "aemlo") {
    if (cfg.model.empty()) throw ConfigError("the aemlo sampler needs --model");
    model = load_model(read_text_file(cfg.model));
  }
  const SampleOutcome outcome = run_sampler(cfg, ds, model ? &*model : nullptr);
  const auto dir = output_dir(cfg);
  write_augmented(dir, cfg, outcome.dataset);
  write_json(dir / "provenance.json", outcome.provenance);
  RunConfig replay = cfg;
  replay.format = std::string(format_name(resolve_format(cfg, cfg.input)));
  write_json(dir / "resolved_config.json", replay.to_json());
  out << cfg.sampler << ": " << ds.num_instances() << " -> " << outcome.dataset.num_instances()
      << " instances\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const MultiLabelDataset train_raw = load_dataset(cfg, cfg.input);
  if (cfg.test.empty()) throw ConfigError("eval needs a test dataset (--test)");
  const MultiLabelDataset test_raw = load_dataset(cfg, cfg.test);
  if (!train_raw.same_schema(test_raw)) {
    throw SchemaError("training and test datasets have different schemas");
  }
  const FeatureScaler scaler = FeatureScaler::fit(train_raw.features());
  const auto classifier = fit_classifier(cfg, scaler.transform(train_raw));
  const EvalReport report = evaluate(*classifier, scaler.transform(test_raw));
  RunConfig replay = cfg;
  replay.format = std::string(format_name(resolve_format(cfg, cfg.input)));
  const json doc = {{"classifier", cfg.classifier},
                    {"report", report.to_json(train_raw.label_names())},
                    {"config", replay.to_json()}};
  if (cfg.out.empty()) {
    out << doc.dump(2) << "\n";
  } else {
    write_json(cfg.out, doc);
  }
  return kExitOk;
}

long long rows_differing(const MultiLabelDataset& part, const MultiLabelDataset& source,
                         const std::vector<std::size_t>& rows) {
  if (static_cast<std::size_t>(part.num_instances()) != rows.size()) {
    return static_cast<long long>(std::max<std::size_t>(rows.size(), part.num_instances()));
  }
  long long differing = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<Index>(r);
    const auto s = static_cast<Index>(rows[r]);
    if (part.features().row(i) != source.features().row(s) ||
        part.labels().row(i) != source.labels().row(s)) {
      ++differing;
    }
  }
  return differing;
}

json leakage_audit(const MultiLabelDataset& source, const DatasetSplit& parts,
                   const SampleOutcome& sampled) {
  std::set<std::size_t> seen;
  bool disjoint = true;
  for (const auto* rows : {&parts.train_rows, &parts.validation_rows, &parts.test_rows}) {
    for (std::size_t r : *rows) disjoint = seen.insert(r).second && disjoint;
  }
  // Oversamplers append after the original training rows; that prefix must be untouched.
  bool prefix_intact = true;
  if (sampled.appended > 0 || sampled.removed == 0) {
    const Index n = parts.train.num_instances();
    prefix_intact = sampled.dataset.num_instances() >= n &&
                    sampled.dataset.features().topRows(n) == parts.train.features() &&
                    sampled.dataset.labels().topRows(n) == parts.train.labels();
  }
  const long long in_validation = rows_differing(parts.validation, source, parts.validation_rows);
  const long long in_test = rows_differing(*parts.test, source, parts.test_rows);
  return {{"synthetic_instances", sampled.appended},
          {"removed_instances", sampled.removed},
          {"train_rows", parts.train_rows.size()},
          {"validation_rows", parts.validation_rows.size()},
          {"test_rows", parts.test_rows.size()},
          {"splits_disjoint", disjoint},
          {"train_prefix_intact", prefix_intact},
          {"synthetic_in_validation", in_validation},
          {"synthetic_in_test", in_test},
          {"passed", disjoint && prefix_intact && in_validation == 0 && in_test == 0}};
}

json delta(const EvalReport& base, const EvalReport& aug) {
  return {{"macro_f", aug.macro_f - base.macro_f},
          {"macro_auc", aug.macro_auc - base.macro_auc},
          {"ranking_loss", aug.ranking_loss - base.ranking_loss}};
}

int cmd_pipeline(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.test_frac > 0.0)) throw ConfigError("pipeline needs --test-frac > 0");
  json timings;
  auto stage = Clock::now();
  const MultiLabelDataset ds = load_dataset(cfg, cfg.input);
  timings["load"] = seconds_since(stage);

  stage = Clock::now();
  const DatasetSplit parts = split(ds, cfg.val_frac, cfg.test_frac, derive_seed(cfg.seed, "split"));
  const FeatureScaler scaler = FeatureScaler::fit(parts.train.features());
  const MultiLabelDataset train_scaled = scaler.transform(parts.train);
  const MultiLabelDataset test_scaled = scaler.transform(*parts.test);
  timings["split_normalize"] = seconds_since(stage);

  std::optional<AemloModel> model;
  std::vector<EpochLog> history;
  stage = Clock::now();
  if (cfg.sampler == "aemlo") {
    TrainResult trained = train(train_scaled, scaler.transform(parts.validation),
                                train_config_for(cfg, train_scaled), scaler);
    model = std::move(trained.model);
    history = std::move(trained.history);
  }
  timings["sampler_train"] = seconds_since(stage);

  stage = Clock::now();
  const SampleOutcome sampled = run_sampler(cfg, parts.train, model ? &*model : nullptr);
  timings["sampler_generate"] = seconds_since(stage);

  stage = Clock::now();
  const auto baseline_clf = fit_classifier(cfg, train_scaled);
  timings["classifier_baseline"] = seconds_since(stage);
  stage = Clock::now();
  const auto augmented_clf = fit_classifier(cfg, scaler.transform(sampled.dataset));
  timings["classifier_augmented"] = seconds_since(stage);

  stage = Clock::now();
  const EvalReport baseline = evaluate(*baseline_clf, test_scaled);
  const EvalReport augmented = evaluate(*augmented_clf, test_scaled);
  timings["evaluate"] = seconds_since(stage);

  const json audit = leakage_audit(ds, parts, sampled);
  json report = {{"sampler", cfg.sampler},
                 {"classifier", cfg.classifier},
                 {"baseline", baseline.to_json(ds.label_names())},
                 {"augmented", augmented.to_json(ds.label_names())},
                 {"delta", delta(baseline, augmented)},
                 {"wall_clock_seconds", timings},
                 {"leakage_audit", audit},
                 {"provenance", sampled.provenance},
                 {"config", resolved(cfg, cfg.input, train_scaled).to_json()}};
  if (!cfg.out.empty()) {
    const auto dir = output_dir(cfg);
    write_json(dir / "report.json", report);
    write_augmented(dir, cfg, sampled.dataset);
    if (model) {
      write_text_file((dir / "model.json").string(), save_model(*model));
      write_text_file((dir / "loss_log.csv").string(), loss_log_csv(history));
    }
  }
  out << report.dump(2) << "\n";
  if (!audit["passed"].get<bool>()) {
    throw Error("leakage audit failed: synthetic or altered rows reached a held-out split");
  }
  return kExitOk;
}

// Registers a flag bound to a scratch config and remembers how to copy it onto the final one,
// so only flags the user actually passed override the config file.
class FlagSet {
 public:
  FlagSet(CLI::App* app, RunConfig& scratch) : app_(app), scratch_(scratch) {}

  template <typename T>
  FlagSet& add(const std::string& name, const std::string& help,
               std::function<T&(RunConfig&)> field) {
    CLI::Option* opt = app_->add_option(name, field(scratch_), help);
    appliers_.emplace_back(opt, [field, this](RunConfig& cfg) { field(cfg) = field(scratch_); });
    return *this;
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [opt, fn] : appliers_) {
      if (opt->count() > 0) fn(cfg);
    }
  }

 private:
  CLI::App* app_;
  RunConfig& scratch_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> appliers_;
};

void add_io_flags(FlagSet& f) {
  f.add<std::string>("--input", "Input dataset (ARFF or CSV)", [](RunConfig& c) -> auto& { return c.input; })
      .add<std::string>("--labels", "MULAN labels XML or comma-separated label names",
                        [](RunConfig& c) -> auto& { return c.labels; })
      .add<long long>("--label-count", "Number of trailing label columns in CSV input",
                      [](RunConfig& c) -> auto& { return c.label_count; })
      .add<std::string>("--format", "arff or csv (default: from extension)",
                        [](RunConfig& c) -> auto& { return c.format; })
      .add<std::string>("--out", "Output path", [](RunConfig& c) -> auto& { return c.out; })
      .add<std::uint64_t>("--seed", "Root random seed", [](RunConfig& c) -> auto& { return c.seed; });
}

void add_split_flags(FlagSet& f) {
  f.add<double>("--val-frac", "Validation fraction", [](RunConfig& c) -> auto& { return c.val_frac; })
      .add<double>("--test-frac", "Test fraction", [](RunConfig& c) -> auto& { return c.test_frac; });
}

void add_train_flags(FlagSet& f) {
  f.add<double>("--alpha", "Feature loss weight", [](RunConfig& c) -> auto& { return c.train.alpha; })
      .add<double>("--beta", "Label loss weight", [](RunConfig& c) -> auto& { return c.train.beta; })
      .add<double>("--lambda-ortho", "Orthonormality penalty",
                   [](RunConfig& c) -> auto& { return c.train.lambda_ortho; })
      .add<double>("--lambda-sim", "Similarity preservation weight",
                   [](RunConfig& c) -> auto& { return c.train.lambda_sim; })
      .add<int>("--latent-dim", "Latent dimension (0 = automatic)",
                [](RunConfig& c) -> auto& { return c.train.latent_dim; })
      .add<int>("--hidden-units", "Hidden layer width",
                [](RunConfig& c) -> auto& { return c.train.hidden_units; })
      .add<int>("--epochs", "Training epochs", [](RunConfig& c) -> auto& { return c.train.epochs; })
      .add<int>("--batch-size", "Mini-batch size",
                [](RunConfig& c) -> auto& { return c.train.batch_size; })
      .add<double>("--lr", "Adam learning rate", [](RunConfig& c) -> auto& { return c.train.lr; });
}

void add_sampling_flags(FlagSet& f) {
  f.add<std::string>("--sampler", "aemlo, mlros, mlrus, mlsmote or none",
                     [](RunConfig& c) -> auto& { return c.sampler; })
      .add<double>("--p", "Sampling rate", [](RunConfig& c) -> auto& { return c.p; })
      .add<long long>("--max-attempts", "Generation attempt budget (0 = 100 * num)",
                      [](RunConfig& c) -> auto& { return c.max_attempts; })
      .add<int>("--smote-k", "MLSMOTE neighbours", [](RunConfig& c) -> auto& { return c.smote_k; });
}

void add_imbalance_flags(FlagSet& f) {
  f.add<double>("--imr-threshold", "Minimum ImR for a minority label",
                [](RunConfig& c) -> auto& { return c.imr_threshold; });
}

void add_classifier_flags(FlagSet& f) {
  f.add<std::string>("--classifier", "br or mlknn", [](RunConfig& c) -> auto& { return c.classifier; })
      .add<int>("--k", "MLkNN neighbours", [](RunConfig& c) -> auto& { return c.k; })
      .add<int>("--epochs-br", "Gradient descent iterations for BR",
                [](RunConfig& c) -> auto& { return c.br_epochs; })
      .add<double>("--br-reg", "L2 strength for BR", [](RunConfig& c) -> auto& { return c.br_reg; });
}

RunConfig base_config() {
  RunConfig cfg;
  if (const char* env = std::getenv("MLBALANCE_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("MLBALANCE_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-label imbalance toolkit: statistics, AEMLO oversampling, baselines"};
  app.name("mlbalance");
  app.require_subcommand(1);

  RunConfig scratch;
  std::string config_path;
  struct Command {
    CLI::App* app;
    std::unique_ptr<FlagSet> flags;
    std::function<int(const RunConfig&, std::ostream&)> run;
  };
  std::vector<Command> commands;
  auto add_command = [&](const std::string& name, const std::string& help,
                         std::function<int(const RunConfig&, std::ostream&)> run,
                         std::initializer_list<void (*)(FlagSet&)> groups) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file (flags take precedence)");
    auto flags = std::make_unique<FlagSet>(sub, scratch);
    for (auto* group : groups) group(*flags);
    commands.push_back({sub, std::move(flags), std::move(run)});
  };
  add_command("stats", "Imbalance profile of a dataset", cmd_stats,
              {add_io_flags, add_imbalance_flags});
  add_command("train", "Train the AEMLO encoder/decoder", cmd_train,
              {add_io_flags, add_split_flags, add_train_flags});
  auto sample_flags = [](FlagSet& f) {
    f.add<std::string>("--model", "Trained model JSON", [](RunConfig& c) -> auto& { return c.model; });
  };
  add_command("sample", "Oversample or undersample a dataset", cmd_sample,
              {add_io_flags, add_imbalance_flags, add_sampling_flags, sample_flags});
  auto test_flag = [](FlagSet& f) {
    f.add<std::string>("--test", "Test dataset", [](RunConfig& c) -> auto& { return c.test; });
  };
  add_command("eval", "Train a classifier and score it on a test set", cmd_eval,
              {add_io_flags, add_classifier_flags, test_flag});
  add_command("pipeline", "Split, resample, classify and compare against no sampling",
              cmd_pipeline,
              {add_io_flags, add_split_flags, add_train_flags, add_imbalance_flags,
               add_sampling_flags, add_classifier_flags});

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    for (const Command& cmd : commands) {
      if (!cmd.app->parsed()) continue;
      RunConfig cfg = base_config();
      if (!config_path.empty()) {
        try {
          cfg.merge_json(json::parse(read_text_file(config_path)));
        } catch (const json::exception& e) {
          throw ConfigError("config file '" + config_path + "': " + e.what());
        }
      }
      cmd.flags->apply(cfg);
      return cmd.run(cfg, out);
    }
    return kExitInput;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const NothingToSampleError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNothingToSample;
  } catch (const GenerationStarvationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitStarvation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace mlbalance
