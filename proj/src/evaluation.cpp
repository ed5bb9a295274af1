#include "splicegan/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "splicegan/errors.hpp"
#include "splicegan/inference.hpp"
#include "splicegan/threading.hpp"

namespace splicegan {

namespace fs = std::filesystem;

RocCurve roc_curve(std::vector<ScoredSample> samples) {
  int64_t positives = 0, negatives = 0;
  for (const auto& s : samples) (s.label ? positives : negatives) += 1;
  if (positives == 0 || negatives == 0)
    throw DegenerateLabelsError("roc_curve needs at least one positive and one negative");

  std::sort(samples.begin(), samples.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  int64_t tp = 0, fp = 0;
  double auc = 0.0;
  size_t i = 0;
  while (i < samples.size()) {
    const double threshold = samples[i].score;
    size_t j = i;
    while (j < samples.size() && samples[j].score == threshold) {
      (samples[j].label ? tp : fp) += 1;
      ++j;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const RocPoint& prev = curve.points.back();
    auc += (fpr - prev.fpr) * (tpr + prev.tpr) / 2.0;
    curve.points.push_back({threshold, fpr, tpr});
    i = j;
  }
  curve.auc = auc;
  return curve;
}

PrCurve pr_curve(std::vector<ScoredSample> samples) {
  int64_t positives = 0;
  for (const auto& s : samples) positives += s.label ? 1 : 0;
  if (positives == 0) throw NoPositivesError("pr_curve needs at least one positive");

  std::sort(samples.begin(), samples.end(),
            [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });

  PrCurve curve;
  int64_t tp = 0, fp = 0;
  double ap = 0.0, prev_recall = 0.0;
  size_t i = 0;
  while (i < samples.size()) {
    const double threshold = samples[i].score;
    size_t j = i;
    while (j < samples.size() && samples[j].score == threshold) {
      (samples[j].label ? tp : fp) += 1;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    curve.points.push_back({threshold, recall, precision});
    prev_recall = recall;
    i = j;
  }
  curve.ap = ap;
  return curve;
}

DetectionEvaluation detection_from_scores(std::vector<PerImageScore> rows) {
  std::vector<ScoredSample> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) samples.push_back({r.score, r.label});
  DetectionEvaluation eval;
  eval.roc = roc_curve(samples);
  eval.pr = pr_curve(samples);
  eval.rows = std::move(rows);
  // Operating point: first ROC threshold maximizing TPR - FPR. The initial
  // +inf point corresponds to "classify everything pristine".
  double best = -1.0;
  double threshold = 0.0;
  for (const auto& p : eval.roc.points) {
    if (p.tpr - p.fpr > best) {
      best = p.tpr - p.fpr;
      threshold = p.threshold;
    }
  }
  eval.operating_threshold = std::isinf(threshold) ? 255.0 : threshold;
  return eval;
}

namespace {

struct SplitMasks {
  std::vector<PerImageScore> rows;
  std::vector<SoftMask> estimates;       // at corpus resolution
  std::vector<ForgeryMask> ground_truth;
};

SplitMasks compute_split_masks(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                               Split split, const std::string& data_root, int workers) {
  const auto records = manifest.split_records(split);
  if (records.empty())
    throw ConfigError(std::string("split ") + to_string(split) + " is empty");
  SplitMasks out;
  out.rows.resize(records.size());
  out.estimates.resize(records.size());
  out.ground_truth.resize(records.size());
  parallel_for(static_cast<int64_t>(records.size()), workers, [&](int64_t i) {
    const PairRecord& rec = *records[static_cast<size_t>(i)];
    const ImageRGB image = load_image_png((fs::path(data_root) / rec.image_path).string());
    SoftMask estimate = estimate_mask(checkpoint, image);
    PerImageScore row;
    row.id = rec.id;
    row.score = detection_score(estimate);
    row.label = rec.size_class == SizeClass::pristine ? 0 : 1;
    row.size_class = rec.size_class;
    out.rows[static_cast<size_t>(i)] = std::move(row);
    out.estimates[static_cast<size_t>(i)] = std::move(estimate);
    out.ground_truth[static_cast<size_t>(i)] =
        load_mask_png((fs::path(data_root) / rec.mask_path).string());
  });
  return out;
}

LocalizationEvaluation localization_from_masks(const SplitMasks& masks, double threshold) {
  std::vector<ScoredSample> pixels;
  LocalizationEvaluation eval;
  for (size_t i = 0; i < masks.rows.size(); ++i) {
    if (masks.rows[i].score < threshold) continue;  // only detected-forged images
    const SoftMask& est = masks.estimates[i];
    const ForgeryMask& gt = masks.ground_truth[i];
    if (est.width != gt.width || est.height != gt.height)
      throw ShapeError("estimate/ground-truth size mismatch for " + masks.rows[i].id);
    eval.images_pooled += 1;
    const size_t base = pixels.size();
    pixels.resize(base + est.data.size());
    for (size_t j = 0; j < est.data.size(); ++j)
      pixels[base + j] = {static_cast<double>(est.data[j]), gt.data[j] ? 1 : 0};
  }
  if (eval.images_pooled == 0)
    throw NoDetectedForgeriesError("no image was classified forged at the operating threshold");
  eval.pixels_pooled = static_cast<int64_t>(pixels.size());
  eval.roc = roc_curve(pixels);
  eval.pr = pr_curve(std::move(pixels));
  return eval;
}

}  // namespace

DetectionEvaluation evaluate_detection(const Checkpoint& checkpoint,
                                       const DatasetManifest& manifest, Split split,
                                       const std::string& data_root, int workers) {
  return detection_from_scores(
      compute_split_masks(checkpoint, manifest, split, data_root, workers).rows);
}

LocalizationEvaluation evaluate_localization(const Checkpoint& checkpoint,
                                             const DatasetManifest& manifest, Split split,
                                             const std::string& data_root, double threshold,
                                             int workers) {
  return localization_from_masks(
      compute_split_masks(checkpoint, manifest, split, data_root, workers), threshold);
}

SplitEvaluation evaluate_split(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                               Split split, const std::string& data_root, int workers) {
  SplitMasks masks = compute_split_masks(checkpoint, manifest, split, data_root, workers);
  SplitEvaluation eval;
  eval.detection = detection_from_scores(masks.rows);
  eval.localization = localization_from_masks(masks, eval.detection.operating_threshold);
  return eval;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CSV: " + path);
  return out;
}

}  // namespace

void write_roc_csv(const std::string& path, const RocCurve& roc) {
  auto out = open_csv(path);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points)
    out << format_value(p.threshold) << ',' << format_value(p.fpr) << ','
        << format_value(p.tpr) << '\n';
}

void write_pr_csv(const std::string& path, const PrCurve& pr) {
  auto out = open_csv(path);
  out << "threshold,recall,precision\n";
  for (const auto& p : pr.points)
    out << format_value(p.threshold) << ',' << format_value(p.recall) << ','
        << format_value(p.precision) << '\n';
}

void write_scores_csv(const std::string& path, const std::vector<PerImageScore>& rows) {
  auto out = open_csv(path);
  out << "id,score,label,size_class\n";
  for (const auto& r : rows)
    out << r.id << ',' << format_value(r.score) << ',' << (r.label ? "forged" : "pristine")
        << ',' << to_string(r.size_class) << '\n';
}

}  // namespace splicegan
