#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plumepipe/cube.hpp"
#include "plumepipe/glt.hpp"

namespace plumepipe {

// Collision handling when several ortho pixels land on one source pixel:
// First  — row-major first writer wins (continuous values),
// Union  — logical OR per band (binary masks),
// Max    — per-band maximum (enhancement maps).
enum class CombineRule { First, Union, Max };

CombineRule combine_rule_from_string(const std::string& s);
const char* combine_rule_name(CombineRule r);

// Source-plane raster holding only the pixels assigned by back-sampling.
struct SparseRaster {
  int rows = 0;
  int cols = 0;
  int bands = 0;
  std::vector<double> wavelengths_nm;
  std::vector<float> values;       // rows*cols*bands, fill where unset
  std::vector<std::uint8_t> set;   // rows*cols, 1 = assigned

  std::size_t pixel_index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  bool is_set(int r, int c) const { return set[pixel_index(r, c)] != 0; }
};

// Forward orthorectification: out[y,x] = src[glt[y,x]], fill where unmapped.
HyperCube orthorectify(const HyperCube& src, const Glt& glt);

// Samples an orthorectified raster back into the source plane through the
// GLT; many-to-one collisions resolved by `rule`. Invalid ortho pixels do
// not contribute.
SparseRaster back_sample(const HyperCube& ortho, const Glt& glt,
                         CombineRule rule);

// Source pixels referenced by any GLT entry, dilated by a Chebyshev margin.
std::vector<std::uint8_t> glt_source_footprint(const Glt& glt, int margin = 0);

// Nearest-neighbor fill: every unset pixel inside `region` takes the value of
// the set pixel at minimum Euclidean distance in pixel coordinates, ties
// broken by smaller row then smaller column. Set pixels inside the region are
// kept as-is; pixels outside the region come back as fill. Runs in O(pixels)
// via a two-pass distance transform with exact integer tie handling.
HyperCube nn_fill(const SparseRaster& sparse,
                  const std::vector<std::uint8_t>& region);

// nn_fill(back_sample(...)) with region = GLT source footprint.
HyperCube unorthorectify(const HyperCube& ortho, const Glt& glt,
                         CombineRule rule, int margin = 0);

// Exposed for tests: per-pixel nearest set pixel as (row, col) pairs, -1 where
// no seed exists. Same metric and tie-break as nn_fill.
std::vector<std::int32_t> nearest_seed_map(const std::vector<std::uint8_t>& set,
                                           int rows, int cols);

}  // namespace plumepipe
