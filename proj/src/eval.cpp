#include "plumepipe/eval.hpp"

#include <cmath>
#include <cstdio>

#include "plumepipe/error.hpp"

namespace plumepipe {

const char* stratum_name(Stratum s) {
  switch (s) {
    case Stratum::All: return "all";
    case Stratum::Strong: return "strong";
    case Stratum::Weak: return "weak";
  }
  return "?";
}

const char* task_name(Task t) {
  return t == Task::Classification ? "classification" : "segmentation";
}

namespace {

bool in_stratum(bool strong, Stratum s) {
  switch (s) {
    case Stratum::All: return true;
    case Stratum::Strong: return strong;
    case Stratum::Weak: return !strong;
  }
  return true;
}

void fill_metrics(MetricsReport& r) {
  const auto& c = r.counts;
  if (c.total() == 0) {  // nothing measured at all
    r.precision = r.recall = r.f1 = r.iou = r.accuracy = 0.0;
    return;
  }
  if (c.tp + c.fp + c.fn == 0) {  // positive-free on both sides
    r.precision = r.recall = r.f1 = r.iou = 100.0;
  } else {
    r.precision = c.tp + c.fp > 0
                      ? 100.0 * static_cast<double>(c.tp) /
                            static_cast<double>(c.tp + c.fp)
                      : 0.0;
    r.recall = c.tp + c.fn > 0 ? 100.0 * static_cast<double>(c.tp) /
                                     static_cast<double>(c.tp + c.fn)
                               : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    r.iou = 100.0 * static_cast<double>(c.tp) /
            static_cast<double>(c.tp + c.fp + c.fn);
  }
  r.accuracy = c.total() > 0 ? 100.0 * static_cast<double>(c.tp + c.tn) /
                                   static_cast<double>(c.total())
                             : 0.0;
}

}  // namespace

ConfusionCounts pixel_confusion(const HyperCube& pred, const HyperCube& gt) {
  if (pred.rows != gt.rows || pred.cols != gt.cols)
    throw Error(Errc::ShapeMismatch, "prediction/ground-truth shape mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
    if (!gt.valid[i]) continue;
    bool g = mask_positive(gt.data[i * gt.bands]);
    bool p = pred.valid[i] && mask_positive(pred.data[i * pred.bands]);
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricsReport pixel_metrics(const std::vector<MaskPair>& pairs, Stratum stratum,
                            Aggregation aggregation,
                            double strong_threshold_ppm_m) {
  MetricsReport r;
  r.task = Task::Segmentation;
  r.stratum = stratum;
  r.strong_threshold_ppm_m = strong_threshold_ppm_m;
  r.aggregation = aggregation;

  if (aggregation == Aggregation::Micro) {
    for (const MaskPair& mp : pairs) {
      if (!in_stratum(mp.strong, stratum)) continue;
      r.counts += pixel_confusion(*mp.pred, *mp.gt);
    }
    fill_metrics(r);
    return r;
  }

  // Macro: average per-tile metrics; tiles that are positive-free on both
  // sides carry no information and are skipped.
  double p = 0, rc = 0, f1 = 0, iou = 0, acc = 0;
  std::uint64_t n = 0, n_acc = 0;
  for (const MaskPair& mp : pairs) {
    if (!in_stratum(mp.strong, stratum)) continue;
    MetricsReport tr;
    tr.counts = pixel_confusion(*mp.pred, *mp.gt);
    fill_metrics(tr);
    r.counts += tr.counts;
    if (tr.counts.total() > 0) {
      acc += tr.accuracy;
      ++n_acc;
    }
    if (tr.counts.tp + tr.counts.fp + tr.counts.fn == 0) continue;
    p += tr.precision;
    rc += tr.recall;
    f1 += tr.f1;
    iou += tr.iou;
    ++n;
  }
  r.precision = n ? p / static_cast<double>(n) : 0.0;
  r.recall = n ? rc / static_cast<double>(n) : 0.0;
  r.f1 = n ? f1 / static_cast<double>(n) : 0.0;
  r.iou = n ? iou / static_cast<double>(n) : 0.0;
  r.accuracy = n_acc ? acc / static_cast<double>(n_acc) : 0.0;
  return r;
}

MetricsReport tile_metrics(const std::vector<std::uint8_t>& pred_labels,
                           const std::vector<std::uint8_t>& gt_labels,
                           const std::vector<std::uint8_t>& strong,
                           Stratum stratum, double strong_threshold_ppm_m) {
  if (pred_labels.size() != gt_labels.size() ||
      (!strong.empty() && strong.size() != gt_labels.size()))
    throw Error(Errc::LengthMismatch, "label sequences differ in length");
  MetricsReport r;
  r.task = Task::Classification;
  r.stratum = stratum;
  r.strong_threshold_ppm_m = strong_threshold_ppm_m;
  for (std::size_t i = 0; i < gt_labels.size(); ++i) {
    bool s = strong.empty() ? false : strong[i] != 0;
    if (!in_stratum(s, stratum)) continue;
    bool p = pred_labels[i] != 0;
    bool g = gt_labels[i] != 0;
    if (p && g)
      ++r.counts.tp;
    else if (p && !g)
      ++r.counts.fp;
    else if (!p && g)
      ++r.counts.fn;
    else
      ++r.counts.tn;
  }
  fill_metrics(r);
  return r;
}

std::vector<std::uint8_t> labels_from_masks(
    const std::vector<const HyperCube*>& masks) {
  std::vector<std::uint8_t> labels;
  labels.reserve(masks.size());
  for (const HyperCube* m : masks) {
    bool any = false;
    for (std::size_t i = 0; i < m->pixel_count() && !any; ++i)
      any = m->valid[i] && mask_positive(m->data[i * m->bands]);
    labels.push_back(any ? 1 : 0);
  }
  return labels;
}

double improvement(double a, double b, ImprovementKind kind) {
  if (kind == ImprovementKind::Points) return a - b;
  if (b == 0.0)
    throw Error(Errc::DivisionByZero,
                "relative improvement needs a nonzero baseline");
  return 100.0 * (a - b) / b;
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace plumepipe
