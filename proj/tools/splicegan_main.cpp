#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "splicegan/dataset_forge.hpp"
#include "splicegan/errors.hpp"
#include "splicegan/evaluation.hpp"
#include "splicegan/inference.hpp"
#include "splicegan/svg_plot.hpp"
#include "splicegan/threading.hpp"
#include "splicegan/training.hpp"

namespace fs = std::filesystem;
using namespace splicegan;
using ordered_json = nlohmann::ordered_json;

namespace {

// Global seed fallback: flag > config file > SPLICEGAN_SEED > 0.
uint64_t env_seed() {
  const char* env = std::getenv("SPLICEGAN_SEED");
  if (!env) return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    throw ConfigError("SPLICEGAN_SEED is not an integer");
  }
}

ordered_json load_config_file(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  return doc;
}

template <typename T>
void maybe(const ordered_json& doc, const char* key, T& value) {
  if (doc.contains(key)) value = doc.at(key).get<T>();
}

std::string json_line(const ordered_json& doc) { return doc.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

std::vector<std::pair<double, double>> roc_points(const RocCurve& roc) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : roc.points) pts.emplace_back(p.fpr, p.tpr);
  return pts;
}

std::vector<std::pair<double, double>> pr_points(const PrCurve& pr) {
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, pr.points.empty() ? 1.0 : pr.points.front().precision);
  for (const auto& p : pr.points) pts.emplace_back(p.recall, p.precision);
  return pts;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string config_path;
  std::string out_dir;
  std::string bases_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  double scale = 1.0;
  int workers = default_workers();
};

int cmd_synth(const SynthArgs& args) {
  ordered_json config = load_config_file(args.config_path);
  SynthesisOptions options;
  options.scale = args.scale;
  options.workers = args.workers;
  maybe(config, "scale", options.scale);
  if (args.scale != 1.0) options.scale = args.scale;  // flag overrides file

  uint64_t seed = env_seed();
  maybe(config, "seed", seed);
  if (args.seed_set) seed = args.seed;

  if (!args.bases_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.bases_dir))
      if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) options.user_bases.push_back(load_image_png(file.string()));
  }

  DatasetManifest manifest = synthesize_corpus(args.out_dir, seed, options);
  build_splits(manifest, seed);
  save_manifest((fs::path(args.out_dir) / "manifest.json").string(), manifest);

  const ClassCounts counts = manifest.counts();
  std::printf("synthesized %lld pairs: small=%lld medium=%lld large=%lld pristine=%lld\n",
              static_cast<long long>(counts.total()), static_cast<long long>(counts.small),
              static_cast<long long>(counts.medium), static_cast<long long>(counts.large),
              static_cast<long long>(counts.pristine));
  std::printf("splits: train=%zu validation=%zu test=%zu\n",
              manifest.split_records(Split::train).size(),
              manifest.split_records(Split::validation).size(),
              manifest.split_records(Split::test).size());
  std::printf("manifest: %s\n", (fs::path(args.out_dir) / "manifest.json").c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::string resume;
  TrainConfig config;
  bool seed_set = false;
  uint64_t seed = 0;
  std::string loss_mode = "bce";
  std::string val_metric = "pixel_auc";
};

int cmd_train(TrainArgs& args) {
  ordered_json config = load_config_file(args.config_path);
  maybe(config, "epochs", args.config.epochs);
  maybe(config, "learning_rate", args.config.learning_rate);
  maybe(config, "beta1", args.config.beta1);
  maybe(config, "beta2", args.config.beta2);
  maybe(config, "batch_size", args.config.batch_size);
  maybe(config, "lambda", args.config.loss.lambda);
  maybe(config, "preset", args.config.preset);
  maybe(config, "checkpoint_every", args.config.checkpoint_every);
  maybe(config, "loss", args.loss_mode);
  maybe(config, "validation_metric", args.val_metric);

  args.config.loss.recon_mode = recon_mode_from_string(args.loss_mode);
  args.config.validation_metric = validation_metric_from_string(args.val_metric);
  args.config.seed = env_seed();
  maybe(config, "seed", args.config.seed);
  if (args.seed_set) args.config.seed = args.seed;

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  const std::string data_root = fs::path(args.manifest_path).parent_path().string();
  const TrainResult result =
      train(args.config, manifest, data_root, args.out_dir, args.resume);

  std::printf("metrics: %s\n", result.metrics_csv_path.c_str());
  std::printf("best checkpoint: %s (epoch %d", result.best_checkpoint_path.c_str(),
              result.best_epoch);
  if (result.has_best_metric)
    std::printf(", val_%s=%.6f", to_string(args.config.validation_metric),
                result.best_metric);
  std::printf(")\n");
  return 0;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferArgs {
  std::string checkpoint_path;
  std::string manifest_path;
  std::string split = "test";
  std::vector<std::string> images;
  std::string out_dir;
  double threshold = 0.5;
  double tau = 0.5;
  int workers = default_workers();
};

int cmd_infer(const InferArgs& args) {
  const Checkpoint checkpoint = load_checkpoint(args.checkpoint_path);
  fs::create_directories(args.out_dir);
  if (!fs::is_directory(args.out_dir)) throw IoError("cannot create " + args.out_dir);

  struct Item {
    std::string id;
    std::string path;
  };
  std::vector<Item> items;
  if (!args.manifest_path.empty()) {
    const DatasetManifest manifest = load_manifest(args.manifest_path);
    const std::string root = fs::path(args.manifest_path).parent_path().string();
    for (const PairRecord* rec : manifest.split_records(split_from_string(args.split)))
      items.push_back({rec->id, (fs::path(root) / rec->image_path).string()});
  }
  for (const std::string& path : args.images)
    items.push_back({fs::path(path).stem().string(), path});
  if (items.empty()) throw ConfigError("nothing to infer: pass --manifest or --image");

  parallel_for(static_cast<int64_t>(items.size()), args.workers, [&](int64_t i) {
    const Item& item = items[static_cast<size_t>(i)];
    const ImageRGB image = load_image_png(item.path);
    const SoftMask soft = estimate_mask(checkpoint, image);
    const DetectionResult detection = classify(detection_score(soft), args.threshold);
    save_soft_mask_png((fs::path(args.out_dir) / (item.id + "_mask.png")).string(), soft);
    save_mask_png((fs::path(args.out_dir) / (item.id + "_mask_bin.png")).string(),
                  localize(soft, args.tau));
    ordered_json record;
    record["id"] = item.id;
    record["score"] = detection.score;
    record["threshold"] = detection.threshold;
    record["label"] = detection.label == Label::forged ? "forged" : "pristine";
    write_text((fs::path(args.out_dir) / (item.id + ".json")).string(), json_line(record));
  });
  std::printf("inferred %zu images into %s\n", items.size(), args.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint_path;
  std::string checkpoint_l1_path;
  std::string manifest_path;
  std::string split = "test";
  std::string out_dir;
  bool compare = false;
  int workers = default_workers();
};

ordered_json eval_one(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                      Split split, const std::string& root, const EvalArgs& args,
                      const std::string& pref, RocCurve* loc_roc_out) {
  const SplitEvaluation eval = evaluate_split(checkpoint, manifest, split, root, args.workers);
  const fs::path out(args.out_dir);
  write_roc_csv((out / (pref + "detection_roc.csv")).string(), eval.detection.roc);
  write_pr_csv((out / (pref + "detection_pr.csv")).string(), eval.detection.pr);
  write_scores_csv((out / (pref + "detection_scores.csv")).string(), eval.detection.rows);
  write_roc_csv((out / (pref + "localization_roc.csv")).string(), eval.localization.roc);
  write_pr_csv((out / (pref + "localization_pr.csv")).string(), eval.localization.pr);

  const std::string mode = to_string(checkpoint.recon_mode);
  write_svg_plot((out / (pref + "detection_roc.svg")).string(), "Detection ROC (" + mode + ")",
                 "False positive rate", "True positive rate",
                 {{mode + " (AUC " + std::to_string(eval.detection.roc.auc) + ")",
                   roc_points(eval.detection.roc)}},
                 true);
  write_svg_plot((out / (pref + "localization_roc.svg")).string(),
                 "Localization ROC (" + mode + ")", "False positive rate",
                 "True positive rate",
                 {{mode + " (AUC " + std::to_string(eval.localization.roc.auc) + ")",
                   roc_points(eval.localization.roc)}},
                 true);
  write_svg_plot((out / (pref + "detection_pr.svg")).string(), "Detection PR (" + mode + ")",
                 "Recall", "Precision",
                 {{mode + " (AP " + std::to_string(eval.detection.pr.ap) + ")",
                   pr_points(eval.detection.pr)}},
                 false);
  write_svg_plot((out / (pref + "localization_pr.svg")).string(),
                 "Localization PR (" + mode + ")", "Recall", "Precision",
                 {{mode + " (AP " + std::to_string(eval.localization.pr.ap) + ")",
                   pr_points(eval.localization.pr)}},
                 false);

  ordered_json summary;
  summary["auc_detection"] = eval.detection.roc.auc;
  summary["ap_detection"] = eval.detection.pr.ap;
  summary["auc_localization"] = eval.localization.roc.auc;
  summary["ap_localization"] = eval.localization.pr.ap;
  summary["loss_mode"] = mode;
  summary["operating_threshold"] = eval.detection.operating_threshold;
  summary["images_pooled"] = eval.localization.images_pooled;
  if (loc_roc_out) *loc_roc_out = eval.localization.roc;
  return summary;
}

int cmd_eval(const EvalArgs& args) {
  const DatasetManifest manifest = load_manifest(args.manifest_path);
  const std::string root = fs::path(args.manifest_path).parent_path().string();
  const Split split = split_from_string(args.split);
  fs::create_directories(args.out_dir);
  if (!fs::is_directory(args.out_dir)) throw IoError("cannot create " + args.out_dir);

  const Checkpoint first = load_checkpoint(args.checkpoint_path);
  if (!args.compare) {
    RocCurve loc;
    const ordered_json summary = eval_one(first, manifest, split, root, args, "", &loc);
    write_text((fs::path(args.out_dir) / "summary.json").string(), json_line(summary));
    std::printf("auc_detection=%.6f ap_detection=%.6f auc_localization=%.6f ap_localization=%.6f\n",
                summary["auc_detection"].get<double>(), summary["ap_detection"].get<double>(),
                summary["auc_localization"].get<double>(),
                summary["ap_localization"].get<double>());
    return 0;
  }

  if (args.checkpoint_l1_path.empty())
    throw ConfigError("--compare needs --checkpoint-l1 alongside --checkpoint");
  const Checkpoint second = load_checkpoint(args.checkpoint_l1_path);
  RocCurve roc_a, roc_b;
  const ordered_json summary_a =
      eval_one(first, manifest, split, root, args, to_string(first.recon_mode) + std::string("_"),
               &roc_a);
  const ordered_json summary_b =
      eval_one(second, manifest, split, root, args,
               to_string(second.recon_mode) + std::string("_"), &roc_b);

  // Overlaid localization ROC comparison.
  char label_a[64], label_b[64];
  std::snprintf(label_a, sizeof(label_a), "%s (AUC %.3f)", to_string(first.recon_mode),
                summary_a["auc_localization"].get<double>());
  std::snprintf(label_b, sizeof(label_b), "%s (AUC %.3f)", to_string(second.recon_mode),
                summary_b["auc_localization"].get<double>());
  write_svg_plot((fs::path(args.out_dir) / "localization_roc_compare.svg").string(),
                 "Localization ROC: reconstruction loss comparison", "False positive rate",
                 "True positive rate",
                 {{label_a, roc_points(roc_a)}, {label_b, roc_points(roc_b)}}, true);

  ordered_json combined;
  combined[to_string(first.recon_mode)] = summary_a;
  combined[to_string(second.recon_mode)] = summary_b;
  write_text((fs::path(args.out_dir) / "summary.json").string(), json_line(combined));
  std::printf("%s auc_localization=%.6f | %s auc_localization=%.6f\n",
              to_string(first.recon_mode), summary_a["auc_localization"].get<double>(),
              to_string(second.recon_mode), summary_b["auc_localization"].get<double>());
  return 0;
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct PlotArgs {
  std::vector<std::string> roc_csvs;
  std::vector<std::string> pr_csvs;
  std::string labels;
  std::string out_path;
  std::string title;
};

std::vector<std::pair<double, double>> read_curve_csv(const std::string& path, int col_x,
                                                      int col_y) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open curve CSV: " + path);
  std::vector<std::pair<double, double>> points;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(cells.size()) <= std::max(col_x, col_y)) continue;
    points.emplace_back(std::stod(cells[static_cast<size_t>(col_x)]),
                        std::stod(cells[static_cast<size_t>(col_y)]));
  }
  return points;
}

int cmd_plot(const PlotArgs& args) {
  if (args.roc_csvs.empty() == args.pr_csvs.empty())
    throw ConfigError("pass exactly one of --roc or --pr with at least one CSV");
  const bool is_roc = !args.roc_csvs.empty();
  const auto& files = is_roc ? args.roc_csvs : args.pr_csvs;

  std::vector<std::string> labels;
  {
    size_t start = 0;
    while (start <= args.labels.size() && !args.labels.empty()) {
      const size_t comma = args.labels.find(',', start);
      labels.push_back(args.labels.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  std::vector<PlotSeries> series;
  for (size_t i = 0; i < files.size(); ++i) {
    PlotSeries s;
    s.label = i < labels.size() ? labels[i] : fs::path(files[i]).stem().string();
    s.points = read_curve_csv(files[i], 1, 2);
    series.push_back(std::move(s));
  }
  const std::string title = !args.title.empty() ? args.title : (is_roc ? "ROC" : "PR");
  write_svg_plot(args.out_path, title, is_roc ? "False positive rate" : "Recall",
                 is_roc ? "True positive rate" : "Precision", series, is_roc);
  std::printf("wrote %s\n", args.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-GAN splicing detection pipeline"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Synthesize the forgery corpus and splits");
  synth->add_option("--config", synth_args.config_path, "JSON config file");
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--seed", synth_args.seed, "Corpus seed")
      ->each([&](const std::string&) { synth_args.seed_set = true; });
  synth->add_option("--scale", synth_args.scale, "Corpus scale factor (1.0 = reference)");
  synth->add_option("--bases", synth_args.bases_dir, "Directory of user base PNGs");
  synth->add_option("--workers", synth_args.workers, "Parallel workers");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the generator/discriminator pair");
  train_cmd->add_option("--config", train_args.config_path, "JSON config file");
  train_cmd->add_option("--manifest", train_args.manifest_path, "Dataset manifest")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
  train_cmd->add_option("--epochs", train_args.config.epochs, "Training epochs");
  train_cmd->add_option("--lr", train_args.config.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch-size", train_args.config.batch_size, "Batch size");
  train_cmd->add_option("--lambda", train_args.config.loss.lambda, "Reconstruction weight");
  train_cmd->add_option("--loss", train_args.loss_mode, "Reconstruction mode: bce or l1");
  train_cmd->add_option("--preset", train_args.config.preset, "Model preset: full or tiny");
  train_cmd->add_option("--checkpoint-every", train_args.config.checkpoint_every,
                        "Checkpoint cadence in epochs");
  train_cmd->add_option("--val-metric", train_args.val_metric,
                        "Validation metric: pixel_auc or recon_loss");
  train_cmd->add_option("--seed", train_args.seed, "Training seed")
      ->each([&](const std::string&) { train_args.seed_set = true; });
  train_cmd->add_option("--resume", train_args.resume, "Checkpoint to resume from");

  InferArgs infer_args;
  CLI::App* infer_cmd = app.add_subcommand("infer", "Estimate masks and classify images");
  infer_cmd->add_option("--checkpoint", infer_args.checkpoint_path, "Checkpoint")->required();
  infer_cmd->add_option("--manifest", infer_args.manifest_path, "Dataset manifest");
  infer_cmd->add_option("--split", infer_args.split, "Manifest split to infer");
  infer_cmd->add_option("--image", infer_args.images, "Explicit image PNGs");
  infer_cmd->add_option("--out", infer_args.out_dir, "Output directory")->required();
  infer_cmd->add_option("--threshold", infer_args.threshold,
                        "Detection threshold T on the 0..255 score scale");
  infer_cmd->add_option("--tau", infer_args.tau, "Pixel threshold in [0,1]");
  infer_cmd->add_option("--workers", infer_args.workers, "Parallel workers");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Detection/localization ROC, PR and plots");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint")->required();
  eval_cmd->add_option("--checkpoint-l1", eval_args.checkpoint_l1_path,
                       "Second checkpoint for --compare");
  eval_cmd->add_option("--manifest", eval_args.manifest_path, "Dataset manifest")->required();
  eval_cmd->add_option("--split", eval_args.split, "Manifest split to evaluate");
  eval_cmd->add_option("--out", eval_args.out_dir, "Output directory")->required();
  eval_cmd->add_flag("--compare", eval_args.compare, "Overlay two reconstruction modes");
  eval_cmd->add_option("--workers", eval_args.workers, "Parallel workers");

  PlotArgs plot_args;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render curve CSVs as SVG");
  plot_cmd->add_option("--roc", plot_args.roc_csvs, "ROC CSVs (threshold,fpr,tpr)");
  plot_cmd->add_option("--pr", plot_args.pr_csvs, "PR CSVs (threshold,recall,precision)");
  plot_cmd->add_option("--labels", plot_args.labels, "Comma-separated series labels");
  plot_cmd->add_option("--title", plot_args.title, "Plot title");
  plot_cmd->add_option("--out", plot_args.out_path, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (infer_cmd->parsed()) return cmd_infer(infer_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (plot_cmd->parsed()) return cmd_plot(plot_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
