#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plumepipe/cube.hpp"

namespace plumepipe {

// One 128x128 (by default) crop with provenance. Crops are cut from the
// parent rasters on demand; the tile record itself stays light.
struct Tile {
  std::string image_id;
  int origin_row = 0;
  int origin_col = 0;
  int jitter_row = 0;  // applied offset, (0,0) for originals
  int jitter_col = 0;
  int size = 128;
  bool label = false;   // >= 1 mask-positive pixel in the crop
  bool strong = false;  // max_enhancement >= strong threshold (inclusive)
  double max_enhancement_ppm_m = 0.0;  // max over mask-positive pixels
  std::string split;

  // Shard locations, filled when the tile set is written out.
  std::string cube_path;
  std::string mask_path;
  std::uint64_t cube_offset = 0;
  std::uint64_t mask_offset = 0;

  int row() const { return origin_row + jitter_row; }
  int col() const { return origin_col + jitter_col; }
};

struct TilingParams {
  int size = 128;
  int stride = 128;
  double min_valid_frac = 0.8;  // kept iff strictly more than this is valid
  double strong_threshold_ppm_m = 900.0;
};

struct JitterParams {
  std::vector<std::pair<int, int>> offsets;  // explicit offsets; empty = sample
  int samples_per_tile = 4;
  int max_offset = 32;  // sampled uniformly from [-max_offset, max_offset]^2
  bool include_negatives = false;
};

// Tile origins along one axis: 0, stride, 2*stride, ... while the tile fits,
// plus a final origin clamped so the last tile abuts the raster edge.
std::vector<int> tile_origins(int extent, int size, int stride);

HyperCube crop(const HyperCube& src, int r0, int c0, int size);

bool tile_label(const HyperCube& mask_crop);
// Max enhancement over mask-positive pixels of the window (0 if none).
double max_enhancement(const HyperCube& mask, const HyperCube& enh, int r0,
                       int c0, int size);
bool strong_flag(double max_enhancement_ppm_m, double threshold_ppm_m);
bool strong_flag(const HyperCube& mask_crop, const HyperCube& enh_crop,
                 double threshold_ppm_m);

std::vector<Tile> tile_raster(const std::string& image_id, const HyperCube& cube,
                              const HyperCube& mask, const HyperCube& enh,
                              const TilingParams& p);

// Augments plume-bearing tiles (all tiles when include_negatives) with shifted
// re-crops; out-of-bounds or validity-failing shifts are discarded, duplicate
// effective positions suppressed, labels recomputed from the shifted crop.
std::vector<Tile> jitter_tiles(const std::vector<Tile>& tiles,
                               const HyperCube& cube, const HyperCube& mask,
                               const HyperCube& enh, const TilingParams& tp,
                               const JitterParams& jp, std::uint64_t seed);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{0.80, 0.15, 0.05};  // train, val, test
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  // "train" | "val" | "test"; throws if the id is unknown.
  std::string split_of(const std::string& image_id) const;
};

// Ids are sorted, shuffled by the seeded permutation, then cut as
//   n_test  = ceil(f_test * N)
//   n_train = round_half_up(rest * f_train / (f_train + f_val))
// with one id moved to keep every positive-fraction split non-empty.
SplitManifest split_images(std::vector<std::string> image_ids,
                           std::uint64_t seed,
                           std::array<double, 3> fractions = {0.80, 0.15, 0.05});

void write_split_manifest(const std::string& path, const SplitManifest& m);
SplitManifest read_split_manifest(const std::string& path);

// JSON-lines tile manifest, one record per tile. Shard paths are stored
// relative to the manifest's directory.
void write_tile_manifest(const std::string& path, const std::vector<Tile>& tiles);
std::vector<Tile> read_tile_manifest(const std::string& path);

}  // namespace plumepipe
