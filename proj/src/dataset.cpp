#include "plumepipe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plumepipe/error.hpp"
#include "plumepipe/rng.hpp"

namespace plumepipe {

std::vector<int> tile_origins(int extent, int size, int stride) {
  if (stride <= 0 || stride > size)
    throw Error(Errc::BadStride, "stride must satisfy 0 < stride <= size");
  std::vector<int> origins;
  if (extent < size) return origins;
  for (int o = 0; o + size <= extent; o += stride) origins.push_back(o);
  int last = extent - size;
  if (origins.empty() || origins.back() != last) origins.push_back(last);
  return origins;
}

HyperCube crop(const HyperCube& src, int r0, int c0, int size) {
  HyperCube out;
  out.rows = size;
  out.cols = size;
  out.bands = src.bands;
  out.wavelengths_nm = src.wavelengths_nm;
  out.data.resize(static_cast<std::size_t>(size) * size * src.bands);
  out.valid.resize(static_cast<std::size_t>(size) * size);
  for (int r = 0; r < size; ++r) {
    const float* srow = src.pixel(r0 + r, c0);
    std::copy(srow, srow + static_cast<std::size_t>(size) * src.bands,
              out.data.begin() + out.pixel_index(r, 0) * src.bands);
    const std::uint8_t* svalid = src.valid.data() + src.pixel_index(r0 + r, c0);
    std::copy(svalid, svalid + size, out.valid.begin() + out.pixel_index(r, 0));
  }
  return out;
}

bool tile_label(const HyperCube& mask_crop) {
  for (std::size_t i = 0; i < mask_crop.pixel_count(); ++i)
    if (mask_crop.valid[i] &&
        mask_positive(mask_crop.data[i * mask_crop.bands]))
      return true;
  return false;
}

double max_enhancement(const HyperCube& mask, const HyperCube& enh, int r0,
                       int c0, int size) {
  double m = 0.0;
  for (int r = r0; r < r0 + size; ++r)
    for (int c = c0; c < c0 + size; ++c) {
      if (!mask.is_valid(r, c) || !mask_positive(mask.at(r, c, 0))) continue;
      if (!enh.is_valid(r, c)) continue;
      m = std::max(m, static_cast<double>(enh.at(r, c, 0)));
    }
  return m;
}

bool strong_flag(double max_enhancement_ppm_m, double threshold_ppm_m) {
  return max_enhancement_ppm_m >= threshold_ppm_m;
}

bool strong_flag(const HyperCube& mask_crop, const HyperCube& enh_crop,
                 double threshold_ppm_m) {
  return strong_flag(
      max_enhancement(mask_crop, enh_crop, 0, 0, mask_crop.rows),
      threshold_ppm_m);
}

namespace {

bool keep_by_validity(const HyperCube& cube, int r0, int c0, int size,
                      double min_valid_frac) {
  std::int64_t n = 0;
  for (int r = r0; r < r0 + size; ++r)
    for (int c = c0; c < c0 + size; ++c) n += cube.is_valid(r, c) ? 1 : 0;
  double frac = static_cast<double>(n) /
                (static_cast<double>(size) * static_cast<double>(size));
  return frac > min_valid_frac;  // strict: exactly the threshold is dropped
}

Tile make_tile(const std::string& image_id, const HyperCube& mask,
               const HyperCube& enh, int r0, int c0, int jr, int jc,
               const TilingParams& p) {
  Tile t;
  t.image_id = image_id;
  t.origin_row = r0;
  t.origin_col = c0;
  t.jitter_row = jr;
  t.jitter_col = jc;
  t.size = p.size;
  HyperCube mcrop = crop(mask, t.row(), t.col(), p.size);
  t.label = tile_label(mcrop);
  t.max_enhancement_ppm_m = max_enhancement(mask, enh, t.row(), t.col(), p.size);
  t.strong = strong_flag(t.max_enhancement_ppm_m, p.strong_threshold_ppm_m);
  return t;
}

void check_parent_shapes(const HyperCube& cube, const HyperCube& mask,
                         const HyperCube& enh) {
  if (mask.rows != cube.rows || mask.cols != cube.cols ||
      enh.rows != cube.rows || enh.cols != cube.cols)
    throw Error(Errc::ShapeMismatch,
                "cube, mask and enhancement must share spatial shape");
}

}  // namespace

std::vector<Tile> tile_raster(const std::string& image_id, const HyperCube& cube,
                              const HyperCube& mask, const HyperCube& enh,
                              const TilingParams& p) {
  check_parent_shapes(cube, mask, enh);
  std::vector<Tile> tiles;
  for (int r0 : tile_origins(cube.rows, p.size, p.stride))
    for (int c0 : tile_origins(cube.cols, p.size, p.stride)) {
      if (!keep_by_validity(cube, r0, c0, p.size, p.min_valid_frac)) continue;
      tiles.push_back(make_tile(image_id, mask, enh, r0, c0, 0, 0, p));
    }
  return tiles;
}

std::vector<Tile> jitter_tiles(const std::vector<Tile>& tiles,
                               const HyperCube& cube, const HyperCube& mask,
                               const HyperCube& enh, const TilingParams& tp,
                               const JitterParams& jp, std::uint64_t seed) {
  check_parent_shapes(cube, mask, enh);
  for (const auto& [dr, dc] : jp.offsets)
    if (std::abs(dr) > tp.size / 2 || std::abs(dc) > tp.size / 2)
      throw Error(Errc::OffsetTooLarge,
                  "jitter offset exceeds half the tile size");

  std::vector<Tile> out = tiles;
  std::set<std::pair<int, int>> occupied;
  for (const Tile& t : tiles) occupied.insert({t.row(), t.col()});

  Rng rng(seed);
  for (const Tile& t : tiles) {
    if (!jp.include_negatives && !t.label) continue;
    std::vector<std::pair<int, int>> offsets = jp.offsets;
    if (offsets.empty()) {
      const int span = 2 * jp.max_offset + 1;
      for (int k = 0; k < jp.samples_per_tile; ++k) {
        int dr = static_cast<int>(rng.next_below(span)) - jp.max_offset;
        int dc = static_cast<int>(rng.next_below(span)) - jp.max_offset;
        offsets.emplace_back(dr, dc);
      }
    }
    for (const auto& [dr, dc] : offsets) {
      int r = t.origin_row + dr;
      int c = t.origin_col + dc;
      if (r < 0 || c < 0 || r + tp.size > cube.rows || c + tp.size > cube.cols)
        continue;
      if (!occupied.insert({r, c}).second) continue;  // duplicate position
      if (!keep_by_validity(cube, r, c, tp.size, tp.min_valid_frac)) continue;
      Tile jt = make_tile(t.image_id, mask, enh, t.origin_row, t.origin_col,
                          dr, dc, tp);
      jt.split = t.split;
      out.push_back(jt);
    }
  }
  return out;
}

std::string SplitManifest::split_of(const std::string& image_id) const {
  for (const auto& id : train)
    if (id == image_id) return "train";
  for (const auto& id : val)
    if (id == image_id) return "val";
  for (const auto& id : test)
    if (id == image_id) return "test";
  throw Error(Errc::ConfigError, "image id '" + image_id + "' not in split");
}

SplitManifest split_images(std::vector<std::string> image_ids,
                           std::uint64_t seed,
                           std::array<double, 3> fractions) {
  const auto n = image_ids.size();
  if (n < 3) throw Error(Errc::TooFewImages, "need at least 3 image ids");
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(Errc::ConfigError, "split fractions must sum to 1");

  std::sort(image_ids.begin(), image_ids.end());
  Rng rng(seed);
  rng.shuffle(image_ids);

  auto n_test = static_cast<std::size_t>(
      std::ceil(fractions[2] * static_cast<double>(n)));
  n_test = std::min(n_test, n);
  std::size_t rest = n - n_test;
  double tv = fractions[0] + fractions[1];
  auto n_train = static_cast<std::size_t>(std::floor(
      static_cast<double>(rest) * (tv > 0 ? fractions[0] / tv : 0.0) + 0.5));
  n_train = std::min(n_train, rest);
  std::size_t n_val = rest - n_train;

  // Keep every positive-fraction split non-empty (N >= 3 guarantees room).
  if (fractions[1] > 0 && n_val == 0 && n_train > 1) {
    --n_train;
    ++n_val;
  }
  if (fractions[0] > 0 && n_train == 0 && n_val > 1) {
    --n_val;
    ++n_train;
  }

  SplitManifest m;
  m.seed = seed;
  m.fractions = fractions;
  m.test.assign(image_ids.begin(), image_ids.begin() + n_test);
  m.train.assign(image_ids.begin() + n_test,
                 image_ids.begin() + n_test + n_train);
  m.val.assign(image_ids.begin() + n_test + n_train, image_ids.end());
  std::sort(m.test.begin(), m.test.end());
  std::sort(m.train.begin(), m.train.end());
  std::sort(m.val.begin(), m.val.end());
  return m;
}

void write_split_manifest(const std::string& path, const SplitManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["fractions"] = m.fractions;
  j["assignments"]["train"] = m.train;
  j["assignments"]["val"] = m.val;
  j["assignments"]["test"] = m.test;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

SplitManifest read_split_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::FormatError, path + " is not valid JSON");
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  auto fr = j.at("fractions").get<std::vector<double>>();
  if (fr.size() != 3)
    throw Error(Errc::FormatError, "fractions must have 3 entries");
  m.fractions = {fr[0], fr[1], fr[2]};
  m.train = j.at("assignments").at("train").get<std::vector<std::string>>();
  m.val = j.at("assignments").at("val").get<std::vector<std::string>>();
  m.test = j.at("assignments").at("test").get<std::vector<std::string>>();
  return m;
}

void write_tile_manifest(const std::string& path,
                         const std::vector<Tile>& tiles) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  for (const Tile& t : tiles) {
    nlohmann::json j;
    j["image_id"] = t.image_id;
    j["origin"] = {t.origin_row, t.origin_col};
    j["jitter"] = {t.jitter_row, t.jitter_col};
    j["size"] = t.size;
    j["split"] = t.split;
    j["label"] = t.label;
    j["strong"] = t.strong;
    j["max_enhancement_ppm_m"] = t.max_enhancement_ppm_m;
    j["cube_path"] = t.cube_path;
    j["cube_offset"] = t.cube_offset;
    j["mask_path"] = t.mask_path;
    j["mask_offset"] = t.mask_offset;
    f << j.dump() << "\n";
  }
  if (!f) throw Error(Errc::IoError, "short write to " + path);
}

std::vector<Tile> read_tile_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  std::vector<Tile> tiles;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw Error(Errc::FormatError, "bad manifest line in " + path);
    Tile t;
    t.image_id = j.at("image_id").get<std::string>();
    t.origin_row = j.at("origin")[0].get<int>();
    t.origin_col = j.at("origin")[1].get<int>();
    t.jitter_row = j.at("jitter")[0].get<int>();
    t.jitter_col = j.at("jitter")[1].get<int>();
    t.size = j.at("size").get<int>();
    t.split = j.at("split").get<std::string>();
    t.label = j.at("label").get<bool>();
    t.strong = j.at("strong").get<bool>();
    t.max_enhancement_ppm_m = j.at("max_enhancement_ppm_m").get<double>();
    t.cube_path = j.at("cube_path").get<std::string>();
    t.cube_offset = j.at("cube_offset").get<std::uint64_t>();
    t.mask_path = j.at("mask_path").get<std::string>();
    t.mask_offset = j.at("mask_offset").get<std::uint64_t>();
    tiles.push_back(std::move(t));
  }
  return tiles;
}

}  // namespace plumepipe
