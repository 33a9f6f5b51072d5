// Brute-force reference implementations used to pin expected values.
// Everything here favors obviousness over speed and stays independent of the
// library's code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "plumepipe/cube.hpp"
#include "plumepipe/eval.hpp"
#include "plumepipe/geometry.hpp"
#include "plumepipe/glt.hpp"
#include "plumepipe/rng.hpp"

namespace oracle {

// Element-wise equality treating NaN (the fill value) as equal to NaN.
inline bool same_floats(const std::vector<float>& a,
                        const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool na = std::isnan(a[i]), nb = std::isnan(b[i]);
    if (na != nb) return false;
    if (!na && a[i] != b[i]) return false;
  }
  return true;
}

inline std::vector<int> select_band_indices(
    const std::vector<double>& wl,
    const std::vector<std::pair<double, double>>& ranges,
    const std::vector<double>& rgb) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(wl.size()); ++i) {
    bool inside = false;
    for (auto& [lo, hi] : ranges) inside = inside || (wl[i] >= lo && wl[i] <= hi);
    bool is_rgb = false;
    for (double target : rgb) {
      int best = 0;
      for (int k = 1; k < static_cast<int>(wl.size()); ++k)
        if (std::abs(wl[k] - target) < std::abs(wl[best] - target)) best = k;
      is_rgb = is_rgb || best == i;
    }
    if (inside || is_rgb) out.push_back(i);
  }
  return out;
}

struct FlatStats {
  std::vector<double> mean, stddev;
  std::uint64_t count = 0;
};

inline FlatStats flat_band_stats(
    const std::vector<const plumepipe::HyperCube*>& cubes) {
  FlatStats st;
  const int nb = cubes.front()->bands;
  st.mean.assign(nb, 0.0);
  st.stddev.assign(nb, 0.0);
  for (int b = 0; b < nb; ++b) {
    double sum = 0.0;
    std::uint64_t n = 0;
    for (auto* c : cubes)
      for (int r = 0; r < c->rows; ++r)
        for (int col = 0; col < c->cols; ++col)
          if (c->is_valid(r, col)) {
            sum += c->at(r, col, b);
            ++n;
          }
    st.mean[b] = sum / double(n);
    st.count = n;
    double ssd = 0.0;
    for (auto* c : cubes)
      for (int r = 0; r < c->rows; ++r)
        for (int col = 0; col < c->cols; ++col)
          if (c->is_valid(r, col)) {
            double d = c->at(r, col, b) - st.mean[b];
            ssd += d * d;
          }
    st.stddev[b] = std::sqrt(ssd / double(n));
  }
  return st;
}

// Per-pixel forward lookup.
inline plumepipe::HyperCube orthorectify(const plumepipe::HyperCube& src,
                                         const plumepipe::Glt& glt) {
  plumepipe::HyperCube out;
  out.rows = glt.ortho_rows;
  out.cols = glt.ortho_cols;
  out.bands = src.bands;
  out.wavelengths_nm = src.wavelengths_nm;
  out.data.assign(out.pixel_count() * out.bands, plumepipe::kFillValue);
  out.valid.assign(out.pixel_count(), 0);
  for (int y = 0; y < out.rows; ++y)
    for (int x = 0; x < out.cols; ++x) {
      auto s = glt.sample[glt.index(y, x)];
      auto l = glt.line[glt.index(y, x)];
      if (s < 0 || !src.is_valid(l, s)) continue;
      for (int b = 0; b < out.bands; ++b) out.at(y, x, b) = src.at(l, s, b);
      out.valid[out.pixel_index(y, x)] = 1;
    }
  return out;
}

// Collision scan: for each source pixel, walk every ortho pixel in row-major
// order and combine the ones that land on it.
inline plumepipe::SparseRaster back_sample(const plumepipe::HyperCube& ortho,
                                           const plumepipe::Glt& glt,
                                           plumepipe::CombineRule rule) {
  plumepipe::SparseRaster sp;
  sp.rows = glt.src_rows;
  sp.cols = glt.src_cols;
  sp.bands = ortho.bands;
  sp.wavelengths_nm = ortho.wavelengths_nm;
  sp.values.assign(std::size_t(sp.rows) * sp.cols * sp.bands,
                   plumepipe::kFillValue);
  sp.set.assign(std::size_t(sp.rows) * sp.cols, 0);
  for (int sr = 0; sr < sp.rows; ++sr)
    for (int sc = 0; sc < sp.cols; ++sc) {
      bool have = false;
      std::vector<float> acc(sp.bands, 0.0f);
      for (int y = 0; y < ortho.rows; ++y)
        for (int x = 0; x < ortho.cols; ++x) {
          if (glt.sample[glt.index(y, x)] != sc ||
              glt.line[glt.index(y, x)] != sr || !ortho.is_valid(y, x))
            continue;
          if (!have) {
            for (int b = 0; b < sp.bands; ++b) acc[b] = ortho.at(y, x, b);
            have = true;
            continue;
          }
          for (int b = 0; b < sp.bands; ++b) {
            float v = ortho.at(y, x, b);
            switch (rule) {
              case plumepipe::CombineRule::First:
                break;
              case plumepipe::CombineRule::Union:
                acc[b] = (plumepipe::mask_positive(acc[b]) ||
                          plumepipe::mask_positive(v))
                             ? 1.0f
                             : 0.0f;
                break;
              case plumepipe::CombineRule::Max:
                acc[b] = std::max(acc[b], v);
                break;
            }
          }
        }
      if (have) {
        sp.set[sp.pixel_index(sr, sc)] = 1;
        for (int b = 0; b < sp.bands; ++b)
          sp.values[sp.pixel_index(sr, sc) * sp.bands + b] = acc[b];
      }
    }
  return sp;
}

// Exhaustive nearest-seed scan, minimizing (distance^2, row, col).
inline std::vector<std::int32_t> nearest_seed(
    const std::vector<std::uint8_t>& set, int rows, int cols) {
  std::vector<std::int32_t> out(std::size_t(rows) * cols * 2, -1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      int br = -1, bc = -1;
      for (int sr = 0; sr < rows; ++sr)
        for (int sc = 0; sc < cols; ++sc) {
          if (!set[std::size_t(sr) * cols + sc]) continue;
          std::int64_t d = std::int64_t(r - sr) * (r - sr) +
                           std::int64_t(c - sc) * (c - sc);
          if (d < best || (d == best && (sr < br || (sr == br && sc < bc)))) {
            best = d;
            br = sr;
            bc = sc;
          }
        }
      out[2 * (std::size_t(r) * cols + c)] = br;
      out[2 * (std::size_t(r) * cols + c) + 1] = bc;
    }
  return out;
}

inline std::vector<int> tile_origins(int extent, int size, int stride) {
  std::vector<int> out;
  if (extent < size) return out;
  for (int o = 0; o + size <= extent; o += stride) out.push_back(o);
  if (out.empty() || out.back() != extent - size) out.push_back(extent - size);
  return out;
}

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

// The documented cut: test = ceil(f_test*N); train = round_half_up of the
// 80:95-style share of the rest; one id moved to keep positive-fraction
// splits non-empty.
inline SplitSizes split_sizes(std::size_t n, double f_train, double f_val,
                              double f_test) {
  SplitSizes s;
  s.test = std::min(
      static_cast<std::size_t>(std::ceil(f_test * static_cast<double>(n))), n);
  std::size_t rest = n - s.test;
  double tv = f_train + f_val;
  s.train = std::min(
      static_cast<std::size_t>(std::floor(
          static_cast<double>(rest) * (tv > 0 ? f_train / tv : 0.0) + 0.5)),
      rest);
  s.val = rest - s.train;
  if (f_val > 0 && s.val == 0 && s.train > 1) {
    --s.train;
    ++s.val;
  }
  if (f_train > 0 && s.train == 0 && s.val > 1) {
    --s.val;
    ++s.train;
  }
  return s;
}

inline plumepipe::ConfusionCounts pixel_confusion(
    const plumepipe::HyperCube& pred, const plumepipe::HyperCube& gt) {
  plumepipe::ConfusionCounts c;
  for (int r = 0; r < gt.rows; ++r)
    for (int col = 0; col < gt.cols; ++col) {
      if (!gt.is_valid(r, col)) continue;
      bool g = plumepipe::mask_positive(gt.at(r, col, 0));
      bool p =
          pred.is_valid(r, col) && plumepipe::mask_positive(pred.at(r, col, 0));
      if (p && g)
        ++c.tp;
      else if (p)
        ++c.fp;
      else if (g)
        ++c.fn;
      else
        ++c.tn;
    }
  return c;
}

// Gauss-Jordan inverse for the factorization cross-check.
inline std::vector<double> invert_spd(std::vector<double> a, int n) {
  std::vector<double> inv(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[std::size_t(i) * n + i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[std::size_t(r) * n + col]) >
          std::abs(a[std::size_t(piv) * n + col]))
        piv = r;
    for (int c = 0; c < n; ++c) {
      std::swap(a[std::size_t(piv) * n + c], a[std::size_t(col) * n + c]);
      std::swap(inv[std::size_t(piv) * n + c], inv[std::size_t(col) * n + c]);
    }
    double d = a[std::size_t(col) * n + col];
    for (int c = 0; c < n; ++c) {
      a[std::size_t(col) * n + c] /= d;
      inv[std::size_t(col) * n + c] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[std::size_t(r) * n + col];
      for (int c = 0; c < n; ++c) {
        a[std::size_t(r) * n + c] -= f * a[std::size_t(col) * n + c];
        inv[std::size_t(r) * n + c] -= f * inv[std::size_t(col) * n + c];
      }
    }
  }
  return inv;
}

// Small random fixtures shared by several suites.

inline plumepipe::HyperCube random_cube(plumepipe::Rng& rng, int rows, int cols,
                                        int bands, double invalid_frac = 0.1) {
  std::vector<double> wl(bands);
  for (int b = 0; b < bands; ++b) wl[b] = 400.0 + 10.0 * b;
  auto cube = plumepipe::HyperCube::zeros(rows, cols, bands, wl);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (rng.next_double() < invalid_frac) {
        cube.set_invalid(r, c);
        continue;
      }
      for (int b = 0; b < bands; ++b)
        cube.at(r, c, b) = static_cast<float>(rng.next_double() * 100.0);
    }
  return cube;
}

inline plumepipe::HyperCube random_mask(plumepipe::Rng& rng, int rows, int cols,
                                        double pos_frac = 0.2) {
  auto m = plumepipe::HyperCube::zeros(rows, cols, 1, {0.0});
  for (std::size_t i = 0; i < m.pixel_count(); ++i)
    m.data[i] = rng.next_double() < pos_frac ? 1.0f : 0.0f;
  return m;
}

// Random GLT with every entry mapped (possibly many-to-one).
inline plumepipe::Glt random_glt(plumepipe::Rng& rng, int ortho_rows,
                                 int ortho_cols, int src_rows, int src_cols) {
  auto g = plumepipe::Glt::unmapped(ortho_rows, ortho_cols, src_rows, src_cols);
  for (int y = 0; y < ortho_rows; ++y)
    for (int x = 0; x < ortho_cols; ++x)
      g.set(y, x, static_cast<int>(rng.next_below(src_cols)),
            static_cast<int>(rng.next_below(src_rows)));
  return g;
}

}  // namespace oracle
