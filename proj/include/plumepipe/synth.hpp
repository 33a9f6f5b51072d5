#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumepipe/cube.hpp"
#include "plumepipe/glt.hpp"
#include "plumepipe/matched_filter.hpp"

namespace plumepipe {

struct PlumeSpec {
  double row = 0.0;
  double col = 0.0;
  double sigma_px = 5.0;
  double peak_ppm_m = 1000.0;
};

// Pushbroom-style distortion: each source line l is shifted sideways by
// round(skew_per_line*l + wobble_amp*sin(2*pi*l/wobble_period)) when mapped
// into the ortho grid, so the mapping is bijective per line. crop_margin
// drops the outermost source pixels from the footprint; dropout removes a
// seeded fraction of mappings to open interior gaps for the fill operator.
struct DistortionSpec {
  int column_shift = 0;  // constant sideways shift, every line
  double skew_per_line = 0.0;
  double wobble_amp = 0.0;
  double wobble_period = 0.0;  // <= 0 disables the wobble term
  int crop_margin = 0;
  double dropout = 0.0;
  std::optional<int> ortho_rows;  // explicit ortho extents (default: fitted)
  std::optional<int> ortho_cols;
};

enum class InjectionModel { Linear, Exponential };

struct SceneSpec {
  std::string id = "scene";
  int rows = 64;
  int cols = 64;
  int bands = 8;
  std::vector<double> wavelengths_nm;      // default: linspace 2004..2478
  std::vector<double> background_mean;     // per band; default 1.0
  std::vector<double> background_cov_diag; // per band variances; default 1e-4
  std::vector<double> background_cov;      // optional full bands^2 matrix
  std::vector<PlumeSpec> plumes;
  DistortionSpec distortion;
  InjectionModel injection = InjectionModel::Linear;
  double mask_threshold_ppm_m = 100.0;
  std::vector<AbsorptionLine> signature_lines;  // default: two lines
  double signature_scale = 1e-4;                // peak of t, 1/(ppm·m)
  std::uint64_t seed = 0;

  TargetSignature signature() const;
  void fill_defaults();
};

struct Scene {
  HyperCube cube;         // source-plane radiance
  HyperCube enhancement;  // source-plane concentration field c, ppm·m
  HyperCube mask;         // c >= mask_threshold
};

// GLT from the distortion spec; zero distortion yields the identity mapping.
Glt gen_glt(const SceneSpec& spec);

// Uniformly random bijection between two equal-size grids.
Glt random_permutation_glt(int rows, int cols, std::uint64_t seed);

Scene gen_scene(const SceneSpec& spec);

SceneSpec scene_spec_from_json(const nlohmann::json& j);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);

}  // namespace plumepipe
