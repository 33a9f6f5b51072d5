#include "plumepipe/matched_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "plumepipe/error.hpp"
#include "plumepipe/linalg.hpp"

namespace plumepipe {

TargetSignature load_signature(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open signature file " + path);
  TargetSignature sig;
  sig.source = path;
  std::string linebuf;
  while (std::getline(f, linebuf)) {
    auto hash = linebuf.find('#');
    if (hash != std::string::npos) linebuf.erase(hash);
    std::istringstream ls(linebuf);
    double wl, t;
    if (ls >> wl >> t) {
      sig.wavelengths_nm.push_back(wl);
      sig.t.push_back(t);
    }
  }
  if (sig.t.empty())
    throw Error(Errc::FormatError, "signature file " + path + " has no samples");
  bool all_zero = true;
  for (double v : sig.t) all_zero = all_zero && v == 0.0;
  if (all_zero)
    throw Error(Errc::FormatError, "signature is identically zero");
  return sig;
}

void write_signature(const std::string& path, const TargetSignature& sig) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  f << "# wavelength_nm  t_per_ppm_m\n";
  char buf[64];
  for (std::size_t i = 0; i < sig.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g %.17g\n", sig.wavelengths_nm[i],
                  sig.t[i]);
    f << buf;
  }
}

TargetSignature resample_signature(const TargetSignature& sig,
                                   const std::vector<double>& wavelengths_nm) {
  TargetSignature out;
  out.source = sig.source;
  out.wavelengths_nm = wavelengths_nm;
  out.t.reserve(wavelengths_nm.size());
  for (double wl : wavelengths_nm) {
    std::size_t best = 0;
    double best_d = std::abs(sig.wavelengths_nm[0] - wl);
    for (std::size_t i = 1; i < sig.wavelengths_nm.size(); ++i) {
      double d = std::abs(sig.wavelengths_nm[i] - wl);
      if (d < best_d) {
        best = i;
        best_d = d;
      }
    }
    out.t.push_back(sig.t[best]);
  }
  return out;
}

TargetSignature synthetic_signature(const std::vector<double>& wavelengths_nm,
                                    const std::vector<AbsorptionLine>& lines,
                                    double scale) {
  TargetSignature sig;
  sig.source = "synthetic";
  sig.wavelengths_nm = wavelengths_nm;
  sig.t.assign(wavelengths_nm.size(), 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i < wavelengths_nm.size(); ++i) {
    double v = 0.0;
    for (const AbsorptionLine& ln : lines) {
      double d = (wavelengths_nm[i] - ln.center_nm) / ln.sigma_nm;
      v += ln.depth * std::exp(-0.5 * d * d);
    }
    sig.t[i] = v;
    peak = std::max(peak, v);
  }
  if (peak > 0.0)
    for (double& v : sig.t) v *= scale / peak;
  return sig;
}

namespace {

// Covariance of the pixels selected by `use`, divisor N, plus loading.
GroupStats make_group(const HyperCube& cube, const std::vector<std::uint8_t>& use,
                      std::uint64_t count, double lambda_rel) {
  const int nb = cube.bands;
  GroupStats g;
  g.pixel_count = count;
  g.mu.assign(nb, 0.0);
  for (int r = 0; r < cube.rows; ++r)
    for (int c = 0; c < cube.cols; ++c) {
      if (!use[cube.pixel_index(r, c)]) continue;
      const float* px = cube.pixel(r, c);
      for (int b = 0; b < nb; ++b) g.mu[b] += px[b];
    }
  for (int b = 0; b < nb; ++b) g.mu[b] /= static_cast<double>(count);

  std::vector<double> cov(static_cast<std::size_t>(nb) * nb, 0.0);
  std::vector<double> d(nb);
  for (int r = 0; r < cube.rows; ++r)
    for (int c = 0; c < cube.cols; ++c) {
      if (!use[cube.pixel_index(r, c)]) continue;
      const float* px = cube.pixel(r, c);
      for (int b = 0; b < nb; ++b) d[b] = px[b] - g.mu[b];
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j <= i; ++j)
          cov[static_cast<std::size_t>(i) * nb + j] += d[i] * d[j];
    }
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = cov[static_cast<std::size_t>(i) * nb + j] /
                 static_cast<double>(count);
      cov[static_cast<std::size_t>(i) * nb + j] = v;
      cov[static_cast<std::size_t>(j) * nb + i] = v;
    }

  g.cov = cov;
  if (lambda_rel > 0.0) {
    double diag_mean = 0.0;
    for (int i = 0; i < nb; ++i)
      diag_mean += cov[static_cast<std::size_t>(i) * nb + i];
    diag_mean /= nb;
    double load = lambda_rel * (diag_mean > 0.0 ? diag_mean : 1.0);
    for (int i = 0; i < nb; ++i)
      cov[static_cast<std::size_t>(i) * nb + i] += load;
  }

  if (!try_cholesky(cov, nb))
    throw Error(Errc::SingularCovariance,
                "loaded covariance is not positive definite (lambda too small)");
  g.chol_l = std::move(cov);
  return g;
}

}  // namespace

ColumnStats estimate_background(const HyperCube& cube, Grouping grouping,
                                double lambda_rel) {
  ColumnStats st;
  st.grouping = grouping;
  st.lambda_rel = lambda_rel;
  st.bands = cube.bands;

  const std::uint64_t min_pixels = static_cast<std::uint64_t>(cube.bands) + 1;
  std::vector<std::uint8_t> all_valid(cube.pixel_count(), 0);
  std::uint64_t total = 0;
  for (int r = 0; r < cube.rows; ++r)
    for (int c = 0; c < cube.cols; ++c)
      if (cube.is_valid(r, c)) {
        all_valid[cube.pixel_index(r, c)] = 1;
        ++total;
      }
  // bands+1 is the per-column sufficiency bar; the global group only needs
  // enough samples for a mean and a (loaded) covariance.
  if (total < 2)
    throw Error(Errc::TooFewPixels, "need at least 2 valid pixels, have " +
                                        std::to_string(total));

  if (grouping == Grouping::Global) {
    st.groups.push_back(make_group(cube, all_valid, total, lambda_rel));
    st.column_group.assign(cube.cols, 0);
    return st;
  }

  std::vector<std::uint64_t> col_count(cube.cols, 0);
  for (int r = 0; r < cube.rows; ++r)
    for (int c = 0; c < cube.cols; ++c)
      if (cube.is_valid(r, c)) ++col_count[c];

  st.column_group.assign(cube.cols, -1);
  int global_group = -1;
  std::vector<std::uint8_t> use(cube.pixel_count());
  for (int c = 0; c < cube.cols; ++c) {
    if (col_count[c] < min_pixels) {
      if (global_group < 0) {
        std::fprintf(stderr,
                     "plumepipe: warning: column %d has %llu valid pixels "
                     "(< bands+1), using global background\n",
                     c, static_cast<unsigned long long>(col_count[c]));
        st.groups.push_back(make_group(cube, all_valid, total, lambda_rel));
        global_group = static_cast<int>(st.groups.size()) - 1;
      }
      st.column_group[c] = global_group;
      continue;
    }
    std::fill(use.begin(), use.end(), 0);
    for (int r = 0; r < cube.rows; ++r)
      if (cube.is_valid(r, c)) use[cube.pixel_index(r, c)] = 1;
    st.groups.push_back(make_group(cube, use, col_count[c], lambda_rel));
    st.column_group[c] = static_cast<int>(st.groups.size()) - 1;
  }
  return st;
}

ColumnStats stats_from_known(const std::vector<double>& mu,
                             const std::vector<double>& sigma, int bands,
                             double lambda_rel) {
  ColumnStats st;
  st.grouping = Grouping::Global;
  st.lambda_rel = lambda_rel;
  st.bands = bands;
  GroupStats g;
  g.mu = mu;
  g.pixel_count = 0;
  g.cov = sigma;
  std::vector<double> cov = sigma;
  if (lambda_rel > 0.0) {
    double diag_mean = 0.0;
    for (int i = 0; i < bands; ++i)
      diag_mean += cov[static_cast<std::size_t>(i) * bands + i];
    diag_mean /= bands;
    double load = lambda_rel * (diag_mean > 0.0 ? diag_mean : 1.0);
    for (int i = 0; i < bands; ++i)
      cov[static_cast<std::size_t>(i) * bands + i] += load;
  }
  if (!try_cholesky(cov, bands))
    throw Error(Errc::SingularCovariance,
                "known covariance is not positive definite");
  g.chol_l = std::move(cov);
  st.groups.push_back(std::move(g));
  return st;
}

HyperCube matched_filter(const HyperCube& cube, const ColumnStats& stats,
                         const TargetSignature& signature, MfMode mode) {
  const int nb = cube.bands;
  if (stats.bands != nb || static_cast<int>(signature.t.size()) != nb)
    throw Error(Errc::ShapeMismatch,
                "cube/stats/signature band counts disagree (" +
                    std::to_string(nb) + "/" + std::to_string(stats.bands) +
                    "/" + std::to_string(signature.t.size()) + ")");
  if (!stats.column_group.empty() &&
      static_cast<int>(stats.column_group.size()) != cube.cols)
    throw Error(Errc::ShapeMismatch, "stats column count does not match cube");

  // Per group: w = Sigma^-1 q and the normalizer q' Sigma^-1 q.
  const std::size_t ngroups = stats.groups.size();
  std::vector<std::vector<double>> w(ngroups);
  std::vector<double> denom(ngroups);
  std::vector<double> q(nb);
  for (std::size_t gi = 0; gi < ngroups; ++gi) {
    const GroupStats& g = stats.groups[gi];
    for (int b = 0; b < nb; ++b)
      q[b] = mode == MfMode::MeanScaled ? g.mu[b] * signature.t[b]
                                        : signature.t[b];
    w[gi] = cholesky_solve(g.chol_l, nb, q);
    denom[gi] = dot(q, w[gi]);
    if (!(denom[gi] > 0.0))
      throw Error(Errc::SingularCovariance,
                  "matched-filter normalizer is not positive (zero target?)");
  }

  HyperCube out;
  out.rows = cube.rows;
  out.cols = cube.cols;
  out.bands = 1;
  out.wavelengths_nm = {0.0};
  out.data.assign(out.pixel_count(), kFillValue);
  out.valid.assign(out.pixel_count(), 0);
  for (int r = 0; r < cube.rows; ++r)
    for (int c = 0; c < cube.cols; ++c) {
      if (!cube.is_valid(r, c)) continue;
      int gi = stats.column_group.empty() ? 0 : stats.column_group[c];
      const GroupStats& g = stats.groups[gi];
      const float* px = cube.pixel(r, c);
      double s = 0.0;
      for (int b = 0; b < nb; ++b) s += (px[b] - g.mu[b]) * w[gi][b];
      out.data[out.pixel_index(r, c)] = static_cast<float>(s / denom[gi]);
      out.valid[out.pixel_index(r, c)] = 1;
    }
  return out;
}

HyperCube alpha_to_enhancement(const HyperCube& alpha) {
  HyperCube out = alpha;
  for (std::size_t i = 0; i < out.valid.size(); ++i)
    if (out.valid[i]) out.data[i] = -out.data[i];
  return out;
}

HyperCube threshold_alpha(const HyperCube& enhancement, double threshold_ppm_m) {
  HyperCube out;
  out.rows = enhancement.rows;
  out.cols = enhancement.cols;
  out.bands = 1;
  out.wavelengths_nm = {0.0};
  out.data.assign(out.pixel_count(), kFillValue);
  out.valid.assign(out.pixel_count(), 0);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (!enhancement.valid[i]) continue;
    out.data[i] = enhancement.data[i * enhancement.bands] >= threshold_ppm_m
                      ? 1.0f
                      : 0.0f;
    out.valid[i] = 1;
  }
  return out;
}

}  // namespace plumepipe
