#include "plumepipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plumepipe/error.hpp"
#include "plumepipe/linalg.hpp"
#include "plumepipe/rng.hpp"

namespace plumepipe {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

TargetSignature SceneSpec::signature() const {
  SceneSpec s = *this;
  s.fill_defaults();
  return synthetic_signature(s.wavelengths_nm, s.signature_lines,
                             s.signature_scale);
}

void SceneSpec::fill_defaults() {
  if (wavelengths_nm.empty()) {
    wavelengths_nm.resize(bands);
    for (int b = 0; b < bands; ++b)
      wavelengths_nm[b] =
          2004.0 + (2478.0 - 2004.0) * (bands > 1 ? double(b) / (bands - 1) : 0.0);
  }
  if (background_mean.empty()) background_mean.assign(bands, 1.0);
  if (background_cov.empty() && background_cov_diag.empty())
    background_cov_diag.assign(bands, 1e-4);
  if (signature_lines.empty()) {
    double lo = wavelengths_nm.front(), hi = wavelengths_nm.back();
    double span = std::max(hi - lo, 1.0);
    signature_lines = {{lo + 0.3 * span, 0.08 * span, 1.0},
                       {lo + 0.7 * span, 0.05 * span, 0.6}};
  }
}

Glt gen_glt(const SceneSpec& spec_in) {
  SceneSpec spec = spec_in;
  spec.fill_defaults();
  const DistortionSpec& d = spec.distortion;
  const int src_rows = spec.rows, src_cols = spec.cols;

  std::vector<int> shift(src_rows, 0);
  for (int l = 0; l < src_rows; ++l) {
    double s = d.skew_per_line * l;
    if (d.wobble_period > 0.0)
      s += d.wobble_amp * std::sin(kTwoPi * l / d.wobble_period);
    shift[l] = d.column_shift + static_cast<int>(std::lround(s));
  }
  int smin = *std::min_element(shift.begin(), shift.end());
  int smax = *std::max_element(shift.begin(), shift.end());

  // Fitted extents absorb the shift range; explicit extents place pixels at
  // the unnormalized shift and must contain the footprint.
  const bool fitted = !d.ortho_rows && !d.ortho_cols;
  int ortho_rows = d.ortho_rows.value_or(src_rows);
  int ortho_cols = d.ortho_cols.value_or(src_cols + (smax - smin));
  const int origin = fitted ? smin : 0;

  Rng rng(substream_seed(spec.seed, "glt-dropout"));
  Glt g = Glt::unmapped(ortho_rows, ortho_cols, src_rows, src_cols);
  for (int l = 0; l < src_rows; ++l)
    for (int s = 0; s < src_cols; ++s) {
      bool cropped = l < d.crop_margin || s < d.crop_margin ||
                     l >= src_rows - d.crop_margin ||
                     s >= src_cols - d.crop_margin;
      bool dropped = d.dropout > 0.0 && rng.next_double() < d.dropout;
      if (cropped || dropped) continue;
      int y = l;
      int x = s + shift[l] - origin;
      if (y < 0 || x < 0 || y >= ortho_rows || x >= ortho_cols)
        throw Error(Errc::DistortionOutOfRange,
                    "distortion maps source (" + std::to_string(l) + "," +
                        std::to_string(s) + ") outside the ortho grid");
      g.set(y, x, s, l);
    }
  return g;
}

Glt random_permutation_glt(int rows, int cols, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  std::vector<std::uint32_t> src(n);
  for (std::size_t i = 0; i < n; ++i) src[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  rng.shuffle(src);
  Glt g = Glt::unmapped(rows, cols, rows, cols);
  for (std::size_t i = 0; i < n; ++i) {
    g.sample[i] = static_cast<std::int32_t>(src[i] % cols);
    g.line[i] = static_cast<std::int32_t>(src[i] / cols);
  }
  return g;
}

Scene gen_scene(const SceneSpec& spec_in) {
  SceneSpec spec = spec_in;
  spec.fill_defaults();
  const int nb = spec.bands;
  if (static_cast<int>(spec.background_mean.size()) != nb ||
      static_cast<int>(spec.wavelengths_nm.size()) != nb)
    throw Error(Errc::ConfigError,
                "background mean / wavelengths must have one entry per band");
  for (const PlumeSpec& p : spec.plumes) {
    if (!(p.sigma_px > 0.0))
      throw Error(Errc::ConfigError, "plume sigma must be positive");
    if (p.peak_ppm_m < 0.0)
      throw Error(Errc::ConfigError, "plume peak must be non-negative");
  }

  // Background sampler: full covariance via Cholesky, or per-band sigmas.
  std::vector<double> chol;
  std::vector<double> diag_sigma;
  if (!spec.background_cov.empty()) {
    if (spec.background_cov.size() != static_cast<std::size_t>(nb) * nb)
      throw Error(Errc::InvalidCovariance, "covariance must be bands x bands");
    chol = spec.background_cov;
    if (!try_cholesky(chol, nb))
      throw Error(Errc::InvalidCovariance,
                  "background covariance is not positive definite");
  } else {
    diag_sigma.resize(nb);
    for (int b = 0; b < nb; ++b) {
      double v = spec.background_cov_diag[b];
      if (v < 0.0)
        throw Error(Errc::InvalidCovariance, "negative band variance");
      diag_sigma[b] = std::sqrt(v);
    }
  }

  TargetSignature sig = spec.signature();

  Scene sc;
  sc.cube = HyperCube::zeros(spec.rows, spec.cols, nb, spec.wavelengths_nm);
  sc.enhancement = HyperCube::zeros(spec.rows, spec.cols, 1, {0.0});
  sc.mask = HyperCube::zeros(spec.rows, spec.cols, 1, {0.0});

  Rng rng(substream_seed(spec.seed, "scene-background"));
  std::vector<double> z(nb);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      for (int b = 0; b < nb; ++b) z[b] = rng.next_normal();
      double conc = 0.0;
      for (const PlumeSpec& p : spec.plumes) {
        double dr = r - p.row, dc = c - p.col;
        conc += p.peak_ppm_m *
                std::exp(-(dr * dr + dc * dc) / (2.0 * p.sigma_px * p.sigma_px));
      }
      float* px = sc.cube.pixel(r, c);
      for (int b = 0; b < nb; ++b) {
        double base = spec.background_mean[b];
        if (!chol.empty()) {
          double s = 0.0;
          for (int k = 0; k <= b; ++k)
            s += chol[static_cast<std::size_t>(b) * nb + k] * z[k];
          base += s;
        } else {
          base += diag_sigma[b] * z[b];
        }
        double attenuated = spec.injection == InjectionModel::Linear
                                ? base * (1.0 - conc * sig.t[b])
                                : base * std::exp(-conc * sig.t[b]);
        px[b] = static_cast<float>(attenuated);
      }
      sc.enhancement.at(r, c, 0) = static_cast<float>(conc);
      sc.mask.at(r, c, 0) = conc >= spec.mask_threshold_ppm_m ? 1.0f : 0.0f;
    }
  return sc;
}

SceneSpec scene_spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.id = j.value("id", s.id);
  s.rows = j.value("rows", s.rows);
  s.cols = j.value("cols", s.cols);
  s.bands = j.value("bands", s.bands);
  if (j.contains("wavelengths_nm"))
    s.wavelengths_nm = j["wavelengths_nm"].get<std::vector<double>>();
  if (j.contains("background_mean"))
    s.background_mean = j["background_mean"].get<std::vector<double>>();
  if (j.contains("background_cov_diag"))
    s.background_cov_diag = j["background_cov_diag"].get<std::vector<double>>();
  if (j.contains("background_cov")) {
    for (const auto& row : j["background_cov"])
      for (const auto& v : row) s.background_cov.push_back(v.get<double>());
  }
  if (j.contains("plumes"))
    for (const auto& p : j["plumes"])
      s.plumes.push_back({p.value("row", 0.0), p.value("col", 0.0),
                          p.value("sigma_px", 5.0),
                          p.value("peak_ppm_m", 1000.0)});
  if (j.contains("distortion")) {
    const auto& d = j["distortion"];
    s.distortion.column_shift = d.value("column_shift", 0);
    s.distortion.skew_per_line = d.value("skew_per_line", 0.0);
    s.distortion.wobble_amp = d.value("wobble_amp", 0.0);
    s.distortion.wobble_period = d.value("wobble_period", 0.0);
    s.distortion.crop_margin = d.value("crop_margin", 0);
    s.distortion.dropout = d.value("dropout", 0.0);
    if (d.contains("ortho_rows")) s.distortion.ortho_rows = d["ortho_rows"].get<int>();
    if (d.contains("ortho_cols")) s.distortion.ortho_cols = d["ortho_cols"].get<int>();
  }
  std::string inj = j.value("injection", "linear");
  if (inj == "linear")
    s.injection = InjectionModel::Linear;
  else if (inj == "exponential")
    s.injection = InjectionModel::Exponential;
  else
    throw Error(Errc::ConfigError, "unknown injection model '" + inj + "'");
  s.mask_threshold_ppm_m = j.value("mask_threshold_ppm_m", s.mask_threshold_ppm_m);
  if (j.contains("signature_lines"))
    for (const auto& ln : j["signature_lines"])
      s.signature_lines.push_back({ln.value("center_nm", 0.0),
                                   ln.value("sigma_nm", 1.0),
                                   ln.value("depth", 1.0)});
  s.signature_scale = j.value("signature_scale", s.signature_scale);
  s.seed = j.value("seed", s.seed);
  s.fill_defaults();
  return s;
}

nlohmann::json scene_spec_to_json(const SceneSpec& spec_in) {
  SceneSpec s = spec_in;
  s.fill_defaults();
  nlohmann::json j;
  j["id"] = s.id;
  j["rows"] = s.rows;
  j["cols"] = s.cols;
  j["bands"] = s.bands;
  j["wavelengths_nm"] = s.wavelengths_nm;
  j["background_mean"] = s.background_mean;
  if (!s.background_cov.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < s.bands; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < s.bands; ++c)
        row.push_back(s.background_cov[static_cast<std::size_t>(r) * s.bands + c]);
      rows.push_back(row);
    }
    j["background_cov"] = rows;
  } else {
    j["background_cov_diag"] = s.background_cov_diag;
  }
  j["plumes"] = nlohmann::json::array();
  for (const PlumeSpec& p : s.plumes)
    j["plumes"].push_back({{"row", p.row},
                           {"col", p.col},
                           {"sigma_px", p.sigma_px},
                           {"peak_ppm_m", p.peak_ppm_m}});
  j["distortion"]["column_shift"] = s.distortion.column_shift;
  j["distortion"]["skew_per_line"] = s.distortion.skew_per_line;
  j["distortion"]["wobble_amp"] = s.distortion.wobble_amp;
  j["distortion"]["wobble_period"] = s.distortion.wobble_period;
  j["distortion"]["crop_margin"] = s.distortion.crop_margin;
  j["distortion"]["dropout"] = s.distortion.dropout;
  if (s.distortion.ortho_rows) j["distortion"]["ortho_rows"] = *s.distortion.ortho_rows;
  if (s.distortion.ortho_cols) j["distortion"]["ortho_cols"] = *s.distortion.ortho_cols;
  j["injection"] =
      s.injection == InjectionModel::Linear ? "linear" : "exponential";
  j["mask_threshold_ppm_m"] = s.mask_threshold_ppm_m;
  j["signature_lines"] = nlohmann::json::array();
  for (const AbsorptionLine& ln : s.signature_lines)
    j["signature_lines"].push_back({{"center_nm", ln.center_nm},
                                    {"sigma_nm", ln.sigma_nm},
                                    {"depth", ln.depth}});
  j["signature_scale"] = s.signature_scale;
  j["seed"] = s.seed;
  return j;
}

}  // namespace plumepipe
