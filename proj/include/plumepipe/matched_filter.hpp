#pragma once

#include <string>
#include <vector>

#include "plumepipe/cube.hpp"

namespace plumepipe {

// Unit methane absorption coefficient per band (per ppm·m), sampled on the
// wavelength grid it was built for. Positive entries mean absorption, so the
// linear radiance model is L = L0 * (1 - c * t).
struct TargetSignature {
  std::vector<double> wavelengths_nm;
  std::vector<double> t;
  std::string source;
};

// Two whitespace-separated columns (wavelength_nm, t), '#' starts a comment.
TargetSignature load_signature(const std::string& path);
void write_signature(const std::string& path, const TargetSignature& sig);

// Picks, for each requested wavelength, the signature sample with the nearest
// wavelength. Keeps signatures usable after band subsetting.
TargetSignature resample_signature(const TargetSignature& sig,
                                   const std::vector<double>& wavelengths_nm);

struct AbsorptionLine {
  double center_nm = 0.0;
  double sigma_nm = 1.0;
  double depth = 1.0;  // relative line strength
};

// Synthetic Gaussian-absorption-line signature for tests and fixtures;
// `scale` is the peak value of t in 1/(ppm·m).
TargetSignature synthetic_signature(const std::vector<double>& wavelengths_nm,
                                    const std::vector<AbsorptionLine>& lines,
                                    double scale = 1e-4);

enum class Grouping { PerColumn, Global };
enum class MfMode { MeanScaled, Raw };

struct GroupStats {
  std::vector<double> mu;      // per-band background mean
  std::vector<double> cov;     // sample covariance (divisor N), unloaded
  std::vector<double> chol_l;  // lower Cholesky factor of the loaded covariance
  std::uint64_t pixel_count = 0;
};

// Background statistics per pushbroom column (or one global group). Columns
// with too few valid pixels fall back to the global group.
struct ColumnStats {
  Grouping grouping = Grouping::Global;
  double lambda_rel = 1e-4;
  int bands = 0;
  std::vector<GroupStats> groups;
  std::vector<int> column_group;  // column index -> group index

  const GroupStats& group_for_column(int col) const {
    return groups[column_group.empty() ? 0 : column_group[col]];
  }
};

// Sample mean and covariance (divisor N) over valid pixels, with diagonal
// loading lambda_rel * mean(diag(Sigma)) * I (absolute lambda_rel * I when the
// diagonal is all zero). Fails with SingularCovariance when the loaded matrix
// has no Cholesky factor, TooFewPixels when even the global group is smaller
// than bands+1 pixels.
ColumnStats estimate_background(const HyperCube& cube, Grouping grouping,
                                double lambda_rel = 1e-4);

// Builds stats from externally known mean/covariance (row-major bands x bands),
// applied to every column.
ColumnStats stats_from_known(const std::vector<double>& mu,
                             const std::vector<double>& sigma, int bands,
                             double lambda_rel = 0.0);

// Classic linear matched filter:
//   alpha(x) = (x - mu)' Sigma^-1 q / (q' Sigma^-1 q),
// q = mu ⊙ t (mean-scaled, alpha in ppm·m) or q = t (raw). With the absorption
// convention above a plume drives alpha negative; enhancement maps are -alpha.
HyperCube matched_filter(const HyperCube& cube, const ColumnStats& stats,
                         const TargetSignature& signature,
                         MfMode mode = MfMode::MeanScaled);

// Negates valid pixels: alpha map -> enhancement map (plumes positive).
HyperCube alpha_to_enhancement(const HyperCube& alpha);

// Binary mask: enhancement >= threshold on valid pixels.
HyperCube threshold_alpha(const HyperCube& enhancement, double threshold_ppm_m);

}  // namespace plumepipe
