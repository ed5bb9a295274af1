#pragma once

#include <string>
#include <vector>

#include "splicegan/checkpoint.hpp"
#include "splicegan/image.hpp"
#include "splicegan/manifest.hpp"

namespace splicegan {

struct ScoredSample {
  double score = 0.0;
  int label = 0;  // 0 = pristine/negative, 1 = forged/positive
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Sweeps all distinct score thresholds (equal scores grouped into a single
// step) and integrates with the trapezoidal rule; ties therefore contribute
// one half, matching the pairwise statistic exactly.
RocCurve roc_curve(std::vector<ScoredSample> samples);

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  double ap = 0.0;  // sum over the descending sweep of (R_n - R_{n-1}) * P_n
};

PrCurve pr_curve(std::vector<ScoredSample> samples);

struct PerImageScore {
  std::string id;
  double score = 0.0;
  int label = 0;
  SizeClass size_class = SizeClass::pristine;
};

struct DetectionEvaluation {
  RocCurve roc;
  PrCurve pr;
  std::vector<PerImageScore> rows;
  double operating_threshold = 0.0;  // ROC point maximizing TPR - FPR
};

struct LocalizationEvaluation {
  RocCurve roc;
  PrCurve pr;
  int64_t images_pooled = 0;
  int64_t pixels_pooled = 0;
};

struct SplitEvaluation {
  DetectionEvaluation detection;
  LocalizationEvaluation localization;
};

DetectionEvaluation detection_from_scores(std::vector<PerImageScore> rows);

// Runs the generator over every pair in the split and scores images by the
// mask-estimate average.
DetectionEvaluation evaluate_detection(const Checkpoint& checkpoint,
                                       const DatasetManifest& manifest, Split split,
                                       const std::string& data_root, int workers);

// Pixel-level ROC/PR pooled over the images classified forged at threshold T
// (micro-averaged across images).
LocalizationEvaluation evaluate_localization(const Checkpoint& checkpoint,
                                             const DatasetManifest& manifest, Split split,
                                             const std::string& data_root, double threshold,
                                             int workers);

// Detection followed by localization at the detection operating point,
// sharing one pass of mask estimates.
SplitEvaluation evaluate_split(const Checkpoint& checkpoint, const DatasetManifest& manifest,
                               Split split, const std::string& data_root, int workers);

// Artifact writers (CSV columns fixed; values printed with %.9g).
void write_roc_csv(const std::string& path, const RocCurve& roc);
void write_pr_csv(const std::string& path, const PrCurve& pr);
void write_scores_csv(const std::string& path, const std::vector<PerImageScore>& rows);

}  // namespace splicegan
