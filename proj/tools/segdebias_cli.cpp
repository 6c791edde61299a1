// Command-line front end: generate synthetic datasets, run the debiasing
// pipeline and its ablation variants over a test split, and export metrics,
// correlation scatter data and attention maps.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "segdebias/dataset.hpp"
#include "segdebias/debias.hpp"
#include "segdebias/metrics.hpp"
#include "segdebias/parallel.hpp"
#include "segdebias/png_io.hpp"
#include "segdebias/rng.hpp"
#include "segdebias/toy_encoder.hpp"
#include "segdebias/training.hpp"

namespace {

using namespace segdebias;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Run configuration (JSON file, validated strictly before any work starts)
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string run_id = "run";
  std::string dataset_name;
  std::optional<GeneratorParams> generator;
  std::optional<std::filesystem::path> manifest_path;
  std::optional<EncoderConfig> toy_encoder;
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<BiasInductionOptions> bias_induction;
  DebiasConfig debias;
  SplitFractions split{0.6, 0.1, 0.3};
  std::vector<std::string> variants{"full"};
};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      raise(ErrorKind::config, "config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorKind::config, std::string("config: bad value for '") + key + "'");
  }
}

GeneratorParams parse_generator(const json& obj) {
  check_keys(obj, {"n_samples", "image_size", "correlation", "class_balance", "target_coverage", "seed"},
             "dataset.generator");
  GeneratorParams p;
  if (!obj.contains("n_samples")) raise(ErrorKind::config, "config: generator needs n_samples");
  p.n_samples = obj.at("n_samples").get<int>();
  p.image_size = get_or(obj, "image_size", p.image_size);
  p.correlation = get_or(obj, "correlation", p.correlation);
  p.class_balance = get_or(obj, "class_balance", p.class_balance);
  p.target_coverage = get_or(obj, "target_coverage", p.target_coverage);
  p.seed = get_or<std::uint64_t>(obj, "seed", p.seed);
  validate(p);
  return p;
}

EncoderConfig parse_toy_encoder(const json& obj) {
  check_keys(obj, {"image_size", "patch_size", "embed_dim", "num_layers", "num_heads", "text_vocab", "seed"},
             "encoder.toy");
  EncoderConfig c;
  c.image_size = get_or(obj, "image_size", c.image_size);
  c.patch_size = get_or(obj, "patch_size", c.patch_size);
  c.embed_dim = get_or(obj, "embed_dim", c.embed_dim);
  c.num_layers = get_or(obj, "num_layers", c.num_layers);
  c.num_heads = get_or(obj, "num_heads", c.num_heads);
  c.text_vocab = get_or(obj, "text_vocab", c.text_vocab);
  c.seed = get_or<std::uint64_t>(obj, "seed", c.seed);
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::config, "cannot open config file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc,
             {"run_id", "dataset_name", "dataset", "encoder", "bias_induction", "debias", "split",
              "variants"},
             "the top level");

  RunConfig cfg;
  cfg.run_id = get_or<std::string>(doc, "run_id", cfg.run_id);

  if (!doc.contains("dataset")) raise(ErrorKind::config, "config: missing 'dataset'");
  const json& dataset = doc.at("dataset");
  check_keys(dataset, {"generator", "manifest"}, "dataset");
  if (dataset.contains("generator") == dataset.contains("manifest")) {
    raise(ErrorKind::config, "config: dataset needs exactly one of 'generator' or 'manifest'");
  }
  if (dataset.contains("generator")) {
    cfg.generator = parse_generator(dataset.at("generator"));
    cfg.dataset_name = "synthetic";
  } else {
    cfg.manifest_path = dataset.at("manifest").get<std::string>();
    cfg.dataset_name = cfg.manifest_path->stem().string();
  }
  cfg.dataset_name = get_or<std::string>(doc, "dataset_name", cfg.dataset_name);

  if (!doc.contains("encoder")) raise(ErrorKind::config, "config: missing 'encoder'");
  const json& encoder = doc.at("encoder");
  check_keys(encoder, {"toy", "checkpoint"}, "encoder");
  if (encoder.contains("toy") == encoder.contains("checkpoint")) {
    raise(ErrorKind::config, "config: encoder needs exactly one of 'toy' or 'checkpoint'");
  }
  if (encoder.contains("toy")) {
    cfg.toy_encoder = parse_toy_encoder(encoder.at("toy"));
  } else {
    cfg.checkpoint_path = encoder.at("checkpoint").get<std::string>();
  }

  if (doc.contains("bias_induction")) {
    const json& bi = doc.at("bias_induction");
    check_keys(bi, {"steps", "batch_size", "learning_rate", "momentum", "logit_scale", "seed"},
               "bias_induction");
    BiasInductionOptions opts;
    opts.steps = get_or(bi, "steps", opts.steps);
    opts.batch_size = get_or(bi, "batch_size", opts.batch_size);
    opts.learning_rate = get_or(bi, "learning_rate", opts.learning_rate);
    opts.momentum = get_or(bi, "momentum", opts.momentum);
    opts.logit_scale = get_or(bi, "logit_scale", opts.logit_scale);
    opts.seed = get_or<std::uint64_t>(bi, "seed", opts.seed);
    cfg.bias_induction = opts;
  }

  if (!doc.contains("debias")) raise(ErrorKind::config, "config: missing 'debias'");
  const json& debias = doc.at("debias");
  check_keys(debias,
             {"prompts", "target_attribute", "step_size", "max_iterations", "stop_tolerance",
              "noise_sigma", "seed"},
             "debias");
  if (!debias.contains("prompts")) raise(ErrorKind::config, "config: debias needs prompts");
  for (const auto& p : debias.at("prompts")) cfg.debias.prompts.push_back({p.get<std::string>()});
  cfg.debias.target_attribute = get_or<std::string>(debias, "target_attribute", "target");
  cfg.debias.step_size = get_or(debias, "step_size", cfg.debias.step_size);
  cfg.debias.max_iterations = get_or(debias, "max_iterations", cfg.debias.max_iterations);
  cfg.debias.stop_tolerance = get_or(debias, "stop_tolerance", cfg.debias.stop_tolerance);
  cfg.debias.noise_sigma = get_or(debias, "noise_sigma", cfg.debias.noise_sigma);
  cfg.debias.seed = get_or<std::uint64_t>(debias, "seed", cfg.debias.seed);
  validate(cfg.debias);

  if (doc.contains("split")) {
    const json& split = doc.at("split");
    check_keys(split, {"train", "val", "test"}, "split");
    cfg.split.train = get_or(split, "train", 0.0);
    cfg.split.val = get_or(split, "val", 0.0);
    cfg.split.test = get_or(split, "test", 0.0);
  }

  if (doc.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : doc.at("variants")) cfg.variants.push_back(v.get<std::string>());
  }
  for (const auto& name : cfg.variants) {
    if (name != "zero_shot") parse_variant(name); // throws on unknown names
  }
  return cfg;
}

// A single --seed reseeds every stage through fixed offsets.
void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
  if (cfg.generator) cfg.generator->seed = seed;
  if (cfg.toy_encoder) cfg.toy_encoder->seed = seed + 1000;
  if (cfg.bias_induction) cfg.bias_induction->seed = seed + 2000;
  cfg.debias.seed = seed + 3000;
}

// ---------------------------------------------------------------------------
// Shared evaluation machinery
// ---------------------------------------------------------------------------

struct LoadedData {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::array<int, 4> group_counts{};
};

LoadedData resolve_dataset(const RunConfig& cfg) {
  LoadedData data;
  if (cfg.generator) {
    GenerationResult gen = generate(*cfg.generator);
    data.group_counts = gen.group_counts;
    SplitResult sp = split(gen.samples, cfg.split, derive_seed(cfg.generator->seed, "split"));
    data.train = std::move(sp.train);
    data.test = std::move(sp.test);
  } else {
    std::vector<Sample> all = load_manifest(*cfg.manifest_path);
    for (auto& s : all) {
      if (s.split == "train") {
        data.train.push_back(std::move(s));
      } else if (s.split == "test") {
        data.test.push_back(std::move(s));
      }
    }
  }
  return data;
}

std::unique_ptr<ToyEncoder> resolve_encoder(const RunConfig& cfg, const std::vector<Sample>& train) {
  std::unique_ptr<ToyEncoder> encoder;
  if (cfg.toy_encoder) {
    encoder = std::make_unique<ToyEncoder>(*cfg.toy_encoder);
  } else {
    encoder = std::make_unique<ToyEncoder>(ToyEncoder::load_checkpoint(*cfg.checkpoint_path));
  }
  if (cfg.bias_induction) {
    if (train.empty()) {
      raise(ErrorKind::config, "bias_induction requested but the train split is empty");
    }
    fit_contrastive(*encoder, train, cfg.debias.prompts, *cfg.bias_induction);
  }
  return encoder;
}

struct VariantOutcome {
  int predicted_class = 0;
  std::vector<double> similarities;
  bool converged = false;
  int iterations = 0;
  double final_diff = 0.0;
  double iou = 0.0;
  bool iou_flagged = false;
  AttentionMap attention; // filled only when keep_attention is set
  ImageTensor reconstructed;
};

struct SampleOutcome {
  std::string id;
  int group_id = 0;
  int true_class = 0;
  bool has_mask = false;
  VariantOutcome zero_shot;
  std::optional<DeltaPair> delta;
  std::vector<VariantOutcome> variants; // parallel to the requested variant list
};

struct EvalOptions {
  std::vector<std::string> variant_names; // without zero_shot
  bool keep_attention = false;
  bool keep_images = false;
  int workers = 4;
};

double mean_iou_or_zero(const AttentionMap& map, const PatchMask& target, double* iou, bool* flagged) {
  const AttentionIoUResult r = attention_iou(map, target);
  *iou = r.iou;
  *flagged = r.empty_target;
  return r.iou;
}

std::vector<SampleOutcome> evaluate_samples(const std::vector<Sample>& samples,
                                            const RunConfig& cfg, const Encoder& encoder,
                                            const EvalOptions& options) {
  // Variants other than the zero-shot baseline need ground-truth masks.
  if (!options.variant_names.empty()) {
    std::string missing;
    for (const auto& s : samples) {
      if (!s.has_mask) missing += (missing.empty() ? "" : ", ") + s.id;
    }
    if (!missing.empty()) {
      raise(ErrorKind::input,
            "selected variants need target masks, but these samples have none: " + missing);
    }
  }

  std::vector<Embedding> prompt_embs;
  for (const auto& p : cfg.debias.prompts) prompt_embs.push_back(encoder.encode_text(p));

  std::vector<SampleOutcome> outcomes(samples.size());
  parallel_for(static_cast<int>(samples.size()), options.workers, [&](int i) {
    const Sample& sample = samples[static_cast<std::size_t>(i)];
    SampleOutcome& out = outcomes[static_cast<std::size_t>(i)];
    out.id = sample.id;
    out.group_id = sample.group_id;
    out.true_class = sample.class_label;
    out.has_mask = sample.has_mask;

    OracleMaskProvider provider(cfg.debias.target_attribute,
                                sample.has_mask
                                    ? std::map<std::string, BinaryMask>{{sample.id, sample.target_mask}}
                                    : std::map<std::string, BinaryMask>{});

    const ZeroShotResult zs = classify_zero_shot(sample.image, cfg.debias.prompts, encoder);
    out.zero_shot.predicted_class = zs.predicted_class;
    out.zero_shot.similarities = zs.similarities;

    std::optional<PatchMask> patch_target;
    if (sample.has_mask) {
      patch_target = mask_to_patch_grid(sample.target_mask, encoder.patch_size());
      const AttentionMap before = encoder.extract_cls_attention(sample.image);
      mean_iou_or_zero(before, *patch_target, &out.zero_shot.iou, &out.zero_shot.iou_flagged);
      if (options.keep_attention) out.zero_shot.attention = before;

      const Embedding nontarget_emb =
          encoder.encode_image(apply_mask(sample.image, complement(sample.target_mask)));
      const Embedding full_emb = encoder.encode_image(sample.image);
      if (prompt_embs.size() >= 2) {
        out.delta = delta_similarities(nontarget_emb, full_emb, prompt_embs[0], prompt_embs[1]);
      }
    }

    for (const auto& name : options.variant_names) {
      const Variant variant = parse_variant(name);
      DebiasResult r = ablation_variant(sample, variant, cfg.debias, encoder, provider);
      VariantOutcome vo;
      vo.predicted_class = r.predicted_class;
      vo.similarities = r.per_prompt_similarity;
      vo.converged = r.converged;
      vo.iterations = r.state.iterations_used;
      vo.final_diff = r.state.final_max_pairwise_diff;
      const AttentionMap after = encoder.extract_cls_attention(r.reconstructed);
      mean_iou_or_zero(after, *patch_target, &vo.iou, &vo.iou_flagged);
      if (options.keep_attention) vo.attention = after;
      if (options.keep_images) vo.reconstructed = std::move(r.reconstructed);
      out.variants.push_back(std::move(vo));
    }
  });
  return outcomes;
}

// Aggregates one metrics row for a variant column extracted from outcomes.
ReportRow make_row(const RunConfig& cfg, const std::vector<SampleOutcome>& outcomes,
                   const std::string& variant,
                   const std::function<const VariantOutcome&(const SampleOutcome&)>& pick,
                   double corr) {
  std::vector<GroupedPrediction> preds;
  double iou_sum = 0.0;
  int iou_count = 0;
  for (const auto& o : outcomes) {
    const VariantOutcome& vo = pick(o);
    preds.push_back({vo.predicted_class, o.true_class, o.group_id});
    if (o.has_mask) {
      iou_sum += vo.iou;
      iou_count += 1;
    }
  }
  const GroupMetrics m = group_metrics(preds);
  ReportRow row;
  row.run_id = cfg.run_id;
  row.dataset = cfg.dataset_name;
  row.variant = variant;
  row.wg = m.wg;
  row.avg = m.avg;
  row.gap = m.gap;
  row.mean_attention_iou = iou_count > 0 ? iou_sum / iou_count : 0.0;
  row.correlation = corr;
  row.n_samples = static_cast<int>(outcomes.size());
  row.per_group = m.per_group;
  return row;
}

void write_results_jsonl(const std::vector<SampleOutcome>& outcomes,
                         const std::vector<std::string>& variant_names,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  auto emit = [&](const SampleOutcome& o, const std::string& variant, const VariantOutcome& vo,
                  bool optimized) {
    json row;
    row["id"] = o.id;
    row["variant"] = variant;
    row["group_id"] = o.group_id;
    row["true_class"] = o.true_class;
    row["predicted_class"] = vo.predicted_class;
    row["similarities"] = vo.similarities;
    if (optimized) {
      row["converged"] = vo.converged;
      row["iterations"] = vo.iterations;
      row["final_max_pairwise_diff"] = vo.final_diff;
    } else {
      row["converged"] = nullptr;
      row["iterations"] = nullptr;
      row["final_max_pairwise_diff"] = nullptr;
    }
    out << row.dump() << '\n';
  };
  for (const auto& o : outcomes) {
    emit(o, "zero_shot", o.zero_shot, false);
    for (std::size_t v = 0; v < variant_names.size(); ++v) {
      emit(o, variant_names[v], o.variants[v], variant_names[v] == "full");
    }
  }
}

void write_attention_summary(const RunConfig& cfg, const std::vector<SampleOutcome>& outcomes,
                             const std::vector<std::string>& variant_names,
                             const std::filesystem::path& path) {
  (void)cfg;
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << "variant,mean_attention_iou,n_samples,n_empty_target\n";
  auto emit = [&](const std::string& name,
                  const std::function<const VariantOutcome&(const SampleOutcome&)>& pick) {
    double sum = 0.0;
    int count = 0;
    int flagged = 0;
    for (const auto& o : outcomes) {
      if (!o.has_mask) continue;
      sum += pick(o).iou;
      count += 1;
      if (pick(o).iou_flagged) flagged += 1;
    }
    out << name << ',' << format_double(count > 0 ? sum / count : 0.0) << ',' << count << ','
        << flagged << '\n';
  };
  emit("zero_shot", [](const SampleOutcome& o) -> const VariantOutcome& { return o.zero_shot; });
  for (std::size_t v = 0; v < variant_names.size(); ++v) {
    emit(variant_names[v],
         [v](const SampleOutcome& o) -> const VariantOutcome& { return o.variants[v]; });
  }
}

void write_attention_map_csv(const AttentionMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  for (int y = 0; y < map.grid; ++y) {
    for (int x = 0; x < map.grid; ++x) {
      out << format_double(map.at(y, x)) << (x + 1 == map.grid ? '\n' : ',');
    }
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> variants;
  std::optional<std::uint64_t> seed;
  int workers = 4;
  bool dump_images = false;
};

RunConfig prepare_config(const CommonArgs& args) {
  RunConfig cfg = load_run_config(args.config_path);
  if (args.seed) apply_seed_override(cfg, *args.seed);
  if (!args.variants.empty()) {
    cfg.variants = args.variants;
    for (const auto& name : cfg.variants) {
      if (name != "zero_shot") parse_variant(name);
    }
  }
  return cfg;
}

std::vector<std::string> nonbaseline_variants(const RunConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& v : cfg.variants) {
    if (v != "zero_shot" && std::find(names.begin(), names.end(), v) == names.end()) {
      names.push_back(v);
    }
  }
  return names;
}

int cmd_generate(const CommonArgs& args) {
  RunConfig cfg = prepare_config(args);
  if (!cfg.generator) {
    raise(ErrorKind::config, "generate: config must use a dataset.generator source");
  }
  GenerationResult gen = generate(*cfg.generator);
  SplitResult sp = split(gen.samples, cfg.split, derive_seed(cfg.generator->seed, "split"));
  std::vector<Sample> all;
  all.reserve(gen.samples.size());
  for (auto* part : {&sp.train, &sp.val, &sp.test}) {
    for (auto& s : *part) all.push_back(std::move(s));
  }
  std::sort(all.begin(), all.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  write_dataset(all, args.out_dir);

  std::cout << "wrote " << all.size() << " samples to " << args.out_dir << "\n";
  for (int g = 0; g < 4; ++g) {
    std::cout << "group " << g << " (class " << g / 2 << ", background " << g % 2
              << "): " << gen.group_counts[static_cast<std::size_t>(g)] << " samples\n";
  }
  return 0;
}

int cmd_evaluate(const CommonArgs& args) {
  RunConfig cfg = prepare_config(args);
  const std::filesystem::path out_dir = args.out_dir;
  std::filesystem::create_directories(out_dir);

  LoadedData data = resolve_dataset(cfg);
  std::unique_ptr<ToyEncoder> encoder = resolve_encoder(cfg, data.train);

  EvalOptions options;
  options.variant_names = nonbaseline_variants(cfg);
  options.workers = args.workers;
  options.keep_images = args.dump_images;
  const std::vector<SampleOutcome> outcomes =
      evaluate_samples(data.test, cfg, *encoder, options);
  if (outcomes.empty()) raise(ErrorKind::input, "evaluate: the test split is empty");

  // Fig.2-style scatter pairs and their correlation (a property of the
  // dataset + encoder, independent of the variant).
  std::vector<DeltaPair> deltas;
  for (const auto& o : outcomes) {
    if (o.delta) deltas.push_back(*o.delta);
  }
  double corr = std::numeric_limits<double>::quiet_NaN();
  if (deltas.size() >= 2) {
    try {
      corr = correlation(deltas);
    } catch (const Error&) {
      // zero-variance deltas: leave the column as nan
    }
  }

  std::vector<ReportRow> rows;
  rows.push_back(make_row(cfg, outcomes, "zero_shot",
                          [](const SampleOutcome& o) -> const VariantOutcome& { return o.zero_shot; },
                          corr));
  for (std::size_t v = 0; v < options.variant_names.size(); ++v) {
    rows.push_back(make_row(cfg, outcomes, options.variant_names[v],
                            [v](const SampleOutcome& o) -> const VariantOutcome& {
                              return o.variants[v];
                            },
                            corr));
  }
  emit_report(rows, ReportFormat::csv, out_dir / "metrics.csv");
  emit_report(rows, ReportFormat::json, out_dir / "metrics.json");
  write_results_jsonl(outcomes, options.variant_names, out_dir / "results.jsonl");
  write_delta_csv(deltas, out_dir / "deltas.csv");
  write_attention_summary(cfg, outcomes, options.variant_names, out_dir / "attention_summary.csv");

  if (args.dump_images) {
    for (std::size_t v = 0; v < options.variant_names.size(); ++v) {
      const auto dir = out_dir / "reconstructed" / options.variant_names[v];
      std::filesystem::create_directories(dir);
      for (const auto& o : outcomes) {
        write_image_png(o.variants[v].reconstructed, dir / (o.id + ".png"));
      }
    }
  }

  for (const auto& row : rows) {
    std::cout << row.variant << ": wg=" << format_double(row.wg) << " avg=" << format_double(row.avg)
              << " gap=" << format_double(row.gap)
              << " mean_attention_iou=" << format_double(row.mean_attention_iou) << "\n";
  }
  return 0;
}

int cmd_attention(const CommonArgs& args) {
  RunConfig cfg = prepare_config(args);
  const std::filesystem::path out_dir = std::filesystem::path(args.out_dir) / "attention";
  std::filesystem::create_directories(out_dir);

  LoadedData data = resolve_dataset(cfg);
  std::unique_ptr<ToyEncoder> encoder = resolve_encoder(cfg, data.train);
  if (!encoder->has_attention()) {
    raise(ErrorKind::capability, "attention: encoder does not expose attention maps");
  }

  EvalOptions options;
  options.variant_names = nonbaseline_variants(cfg);
  if (options.variant_names.empty()) options.variant_names = {"full"};
  options.keep_attention = true;
  options.workers = args.workers;
  const std::vector<SampleOutcome> outcomes =
      evaluate_samples(data.test, cfg, *encoder, options);
  if (outcomes.empty()) raise(ErrorKind::input, "attention: the test split is empty");

  for (const auto& o : outcomes) {
    if (!o.has_mask) continue;
    write_attention_map_csv(o.zero_shot.attention, out_dir / (o.id + "_before.csv"));
    for (std::size_t v = 0; v < options.variant_names.size(); ++v) {
      write_attention_map_csv(o.variants[v].attention,
                              out_dir / (o.id + "_after_" + options.variant_names[v] + ".csv"));
    }
  }
  write_attention_summary(cfg, outcomes, options.variant_names, out_dir / "summary.csv");

  std::cout << "wrote attention maps for " << outcomes.size() << " samples to " << out_dir << "\n";
  return 0;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::input:
    case ErrorKind::missing_mask:
    case ErrorKind::generation:
    case ErrorKind::stratification:
    case ErrorKind::capability:
      return 1;
    case ErrorKind::numerical:
    case ErrorKind::provider:
    case ErrorKind::io:
      return 2;
  }
  return 2;
}

void print_error(ErrorKind kind, const std::string& message) {
  json line;
  line["error"] = {{"kind", to_string(kind)}, {"message", message}};
  std::cerr << line.dump() << std::endl;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"SegDebias: segmentation-guided test-time debiasing toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&args](CLI::App* cmd, bool with_variant) {
    cmd->add_option("--config", args.config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override every stage seed");
    cmd->add_option("--workers", args.workers, "worker threads for per-sample evaluation")
        ->check(CLI::PositiveNumber);
    if (with_variant) {
      cmd->add_option("--variant", args.variants,
                      "variant(s) to run (zero_shot, target_only, noise_filled, random_repaint, full)");
    }
  };

  CLI::App* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset to disk");
  add_common(generate_cmd, false);
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "run the zero-shot baseline and selected variants");
  add_common(evaluate_cmd, true);
  evaluate_cmd->add_flag("--dump-images", args.dump_images, "write reconstructed images");
  CLI::App* attention_cmd =
      app.add_subcommand("attention", "export before/after attention maps and IoU summary");
  add_common(attention_cmd, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate_cmd->parsed()) return cmd_generate(args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(args);
    if (attention_cmd->parsed()) return cmd_attention(args);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error(ErrorKind::numerical, e.what());
    return 2;
  }
  return 0;
}
