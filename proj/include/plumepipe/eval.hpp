#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plumepipe/cube.hpp"

namespace plumepipe {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

enum class Stratum { All, Strong, Weak };
enum class Task { Classification, Segmentation };
enum class Aggregation { Micro, Macro };

const char* stratum_name(Stratum s);
const char* task_name(Task t);

// Percentages carried at full precision; rendering rounds to 2 decimals.
// A zero-denominator metric reports 0, except when pred and gt are positive-
// free together (tp+fp+fn == 0), which counts as vacuous perfection (100).
struct MetricsReport {
  Task task = Task::Segmentation;
  Stratum stratum = Stratum::All;
  double strong_threshold_ppm_m = 900.0;
  Aggregation aggregation = Aggregation::Micro;
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;  // classification only
  double iou = 0.0;       // segmentation only
};

// One evaluated tile: prediction and ground-truth masks (single-band 0/1
// cubes) plus the strong-plume flag used for stratification. Pixels are
// scored where the ground-truth mask is valid; an invalid or missing
// prediction pixel counts as negative.
struct MaskPair {
  const HyperCube* pred = nullptr;
  const HyperCube* gt = nullptr;
  bool strong = false;
};

ConfusionCounts pixel_confusion(const HyperCube& pred, const HyperCube& gt);

MetricsReport pixel_metrics(const std::vector<MaskPair>& pairs, Stratum stratum,
                            Aggregation aggregation = Aggregation::Micro,
                            double strong_threshold_ppm_m = 900.0);

// Tile-level classification metrics from per-tile labels.
MetricsReport tile_metrics(const std::vector<std::uint8_t>& pred_labels,
                           const std::vector<std::uint8_t>& gt_labels,
                           const std::vector<std::uint8_t>& strong,
                           Stratum stratum,
                           double strong_threshold_ppm_m = 900.0);

// The >= 1 positive pixel rule applied per mask.
std::vector<std::uint8_t> labels_from_masks(
    const std::vector<const HyperCube*>& masks);

enum class ImprovementKind { Relative, Points };

// relative: 100 * (a - b) / b, points: a - b. Inputs are percentages.
double improvement(double a, double b, ImprovementKind kind);

// Rendering helpers shared by the CLI and tests.
std::string format_percent(double v);  // 2 decimals, mirrors the table style

}  // namespace plumepipe
