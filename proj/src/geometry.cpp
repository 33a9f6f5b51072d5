#include "plumepipe/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "plumepipe/error.hpp"

namespace plumepipe {

CombineRule combine_rule_from_string(const std::string& s) {
  if (s == "first") return CombineRule::First;
  if (s == "union") return CombineRule::Union;
  if (s == "max") return CombineRule::Max;
  throw Error(Errc::ConfigError, "unknown combine rule '" + s + "'");
}

const char* combine_rule_name(CombineRule r) {
  switch (r) {
    case CombineRule::First: return "first";
    case CombineRule::Union: return "union";
    case CombineRule::Max: return "max";
  }
  return "?";
}

HyperCube orthorectify(const HyperCube& src, const Glt& glt) {
  if (glt.src_rows != src.rows || glt.src_cols != src.cols)
    throw Error(Errc::ShapeMismatch,
                "GLT source extents " + std::to_string(glt.src_rows) + "x" +
                    std::to_string(glt.src_cols) + " do not match raster " +
                    std::to_string(src.rows) + "x" + std::to_string(src.cols));
  glt.validate();

  HyperCube out;
  out.rows = glt.ortho_rows;
  out.cols = glt.ortho_cols;
  out.bands = src.bands;
  out.wavelengths_nm = src.wavelengths_nm;
  out.data.assign(out.pixel_count() * out.bands, kFillValue);
  out.valid.assign(out.pixel_count(), 0);
  for (int y = 0; y < out.rows; ++y)
    for (int x = 0; x < out.cols; ++x) {
      std::size_t i = glt.index(y, x);
      std::int32_t s = glt.sample[i];
      std::int32_t l = glt.line[i];
      if (s < 0 || !src.is_valid(l, s)) continue;
      const float* px = src.pixel(l, s);
      float* op = out.pixel(y, x);
      for (int b = 0; b < out.bands; ++b) op[b] = px[b];
      out.valid[out.pixel_index(y, x)] = 1;
    }
  return out;
}

SparseRaster back_sample(const HyperCube& ortho, const Glt& glt,
                         CombineRule rule) {
  if (glt.ortho_rows != ortho.rows || glt.ortho_cols != ortho.cols)
    throw Error(Errc::ShapeMismatch,
                "GLT ortho extents " + std::to_string(glt.ortho_rows) + "x" +
                    std::to_string(glt.ortho_cols) + " do not match raster " +
                    std::to_string(ortho.rows) + "x" +
                    std::to_string(ortho.cols));
  glt.validate();

  SparseRaster sp;
  sp.rows = glt.src_rows;
  sp.cols = glt.src_cols;
  sp.bands = ortho.bands;
  sp.wavelengths_nm = ortho.wavelengths_nm;
  sp.values.assign(static_cast<std::size_t>(sp.rows) * sp.cols * sp.bands,
                   kFillValue);
  sp.set.assign(static_cast<std::size_t>(sp.rows) * sp.cols, 0);

  for (int y = 0; y < ortho.rows; ++y)
    for (int x = 0; x < ortho.cols; ++x) {
      std::size_t i = glt.index(y, x);
      std::int32_t s = glt.sample[i];
      std::int32_t l = glt.line[i];
      if (s < 0 || !ortho.is_valid(y, x)) continue;
      const float* src = ortho.pixel(y, x);
      float* dst = sp.values.data() + sp.pixel_index(l, s) * sp.bands;
      std::uint8_t& written = sp.set[sp.pixel_index(l, s)];
      if (!written) {
        for (int b = 0; b < sp.bands; ++b) dst[b] = src[b];
        written = 1;
        continue;
      }
      switch (rule) {
        case CombineRule::First:
          break;  // first writer already holds the pixel
        case CombineRule::Union:
          for (int b = 0; b < sp.bands; ++b)
            dst[b] = (mask_positive(dst[b]) || mask_positive(src[b])) ? 1.0f
                                                                      : 0.0f;
          break;
        case CombineRule::Max:
          for (int b = 0; b < sp.bands; ++b) dst[b] = std::max(dst[b], src[b]);
          break;
      }
    }
  return sp;
}

std::vector<std::uint8_t> glt_source_footprint(const Glt& glt, int margin) {
  std::vector<std::uint8_t> fp(
      static_cast<std::size_t>(glt.src_rows) * glt.src_cols, 0);
  for (std::size_t i = 0; i < glt.sample.size(); ++i)
    if (glt.sample[i] >= 0)
      fp[static_cast<std::size_t>(glt.line[i]) * glt.src_cols + glt.sample[i]] =
          1;
  for (int pass = 0; pass < margin; ++pass) {
    std::vector<std::uint8_t> next = fp;
    for (int r = 0; r < glt.src_rows; ++r)
      for (int c = 0; c < glt.src_cols; ++c) {
        if (fp[static_cast<std::size_t>(r) * glt.src_cols + c]) continue;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            int rr = r + dr, cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= glt.src_rows || cc >= glt.src_cols)
              continue;
            if (fp[static_cast<std::size_t>(rr) * glt.src_cols + cc])
              next[static_cast<std::size_t>(r) * glt.src_cols + c] = 1;
          }
      }
    fp.swap(next);
  }
  return fp;
}

namespace {

// Exact squared Euclidean distance transform with seed propagation.
// Phase 1 finds, per column, the nearest seed row (ties to the smaller row).
// Phase 2 runs a lower-envelope scan per row over the per-column candidates;
// all arithmetic is integral, and exact distance ties between columns are
// resolved by the (seed_row, seed_col) lexicographic order, so the result
// matches the brute-force nearest-seed scan bit for bit.
struct Envelope {
  struct Par {
    std::int64_t c;         // squared vertical distance of the column's seed
    std::int32_t x;         // column of the candidate
    std::int32_t seed_row;  // row of the candidate's seed
    std::int64_t first;     // first query column where this parabola wins
  };
  std::vector<Par> stack;

  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
  }

  // Smallest integer query where `nw` (right column) beats `old` (left column)
  // under (distance, seed_row, seed_col) lexicographic comparison.
  static std::int64_t first_win(const Par& old_p, std::int64_t c_new,
                                std::int32_t x_new, std::int32_t row_new) {
    std::int64_t num = (c_new + static_cast<std::int64_t>(x_new) * x_new) -
                       (old_p.c + static_cast<std::int64_t>(old_p.x) * old_p.x);
    std::int64_t den = 2ll * (x_new - old_p.x);
    std::int64_t q0 = floor_div(num, den);
    if (q0 * den == num) {
      bool new_wins_tie = (row_new < old_p.seed_row) ||
                          (row_new == old_p.seed_row && x_new < old_p.x);
      return new_wins_tie ? q0 : q0 + 1;
    }
    return q0 + 1;
  }

  void add(std::int64_t c, std::int32_t x, std::int32_t seed_row) {
    std::int64_t fw = 0;
    while (!stack.empty()) {
      fw = first_win(stack.back(), c, x, seed_row);
      if (fw <= stack.back().first)
        stack.pop_back();
      else
        break;
    }
    if (stack.empty()) fw = 0;
    stack.push_back({c, x, seed_row, fw});
  }
};

}  // namespace

std::vector<std::int32_t> nearest_seed_map(const std::vector<std::uint8_t>& set,
                                           int rows, int cols) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> d1(static_cast<std::size_t>(rows) * cols, kInf);
  std::vector<std::int32_t> g(static_cast<std::size_t>(rows) * cols, -1);

  // Phase 1: per column, nearest seed row (ties to the smaller row, which is
  // always the one at or above the query).
  for (int c = 0; c < cols; ++c) {
    int last_above = -1;
    for (int r = 0; r < rows; ++r) {
      if (set[static_cast<std::size_t>(r) * cols + c]) last_above = r;
      if (last_above >= 0) {
        std::int64_t d = static_cast<std::int64_t>(r - last_above);
        d1[static_cast<std::size_t>(r) * cols + c] = d * d;
        g[static_cast<std::size_t>(r) * cols + c] = last_above;
      }
    }
    int next_below = -1;
    for (int r = rows - 1; r >= 0; --r) {
      if (set[static_cast<std::size_t>(r) * cols + c]) next_below = r;
      if (next_below >= 0) {
        std::int64_t d = static_cast<std::int64_t>(next_below - r);
        std::size_t i = static_cast<std::size_t>(r) * cols + c;
        if (d * d < d1[i]) {  // strict: equal distance keeps the smaller row
          d1[i] = d * d;
          g[i] = next_below;
        }
      }
    }
  }

  // Phase 2: per row, lower envelope across columns.
  std::vector<std::int32_t> out(static_cast<std::size_t>(rows) * cols * 2, -1);
  Envelope env;
  for (int r = 0; r < rows; ++r) {
    env.stack.clear();
    for (int c = 0; c < cols; ++c) {
      std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (d1[i] != kInf) env.add(d1[i], c, g[i]);
    }
    if (env.stack.empty()) continue;
    std::size_t k = 0;
    for (int c = 0; c < cols; ++c) {
      while (k + 1 < env.stack.size() && env.stack[k + 1].first <= c) ++k;
      const auto& p = env.stack[k];
      std::size_t i = static_cast<std::size_t>(r) * cols + c;
      out[2 * i] = p.seed_row;
      out[2 * i + 1] = p.x;
    }
  }
  return out;
}

HyperCube nn_fill(const SparseRaster& sparse,
                  const std::vector<std::uint8_t>& region) {
  const std::size_t npix = static_cast<std::size_t>(sparse.rows) * sparse.cols;
  if (region.size() != npix)
    throw Error(Errc::ShapeMismatch, "validity region size mismatch");
  bool any_seed_in_region = false;
  for (std::size_t i = 0; i < npix; ++i)
    if (region[i] && sparse.set[i]) {
      any_seed_in_region = true;
      break;
    }
  if (!any_seed_in_region)
    throw Error(Errc::NoSeedPixels,
                "no set pixel inside the validity region to fill from");

  std::vector<std::int32_t> nearest =
      nearest_seed_map(sparse.set, sparse.rows, sparse.cols);

  HyperCube out;
  out.rows = sparse.rows;
  out.cols = sparse.cols;
  out.bands = sparse.bands;
  out.wavelengths_nm = sparse.wavelengths_nm;
  out.data.assign(npix * sparse.bands, kFillValue);
  out.valid.assign(npix, 0);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      std::size_t i = out.pixel_index(r, c);
      if (!region[i]) continue;
      int sr = r, sc = c;
      if (!sparse.set[i]) {
        sr = nearest[2 * i];
        sc = nearest[2 * i + 1];
        if (sr < 0) continue;  // unreachable: a seed exists somewhere
      }
      const float* src =
          sparse.values.data() + sparse.pixel_index(sr, sc) * sparse.bands;
      float* dst = out.pixel(r, c);
      for (int b = 0; b < out.bands; ++b) dst[b] = src[b];
      out.valid[i] = 1;
    }
  return out;
}

HyperCube unorthorectify(const HyperCube& ortho, const Glt& glt,
                         CombineRule rule, int margin) {
  SparseRaster sp = back_sample(ortho, glt, rule);
  return nn_fill(sp, glt_source_footprint(glt, margin));
}

}  // namespace plumepipe
