#include "plumepipe/cube.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plumepipe/error.hpp"

namespace plumepipe {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::EmptySelection: return "EmptySelection";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::NoValidPixels: return "NoValidPixels";
    case Errc::WavelengthMismatch: return "WavelengthMismatch";
    case Errc::BandCountMismatch: return "BandCountMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::OutOfRangeEntry: return "OutOfRangeEntry";
    case Errc::NoSeedPixels: return "NoSeedPixels";
    case Errc::BadStride: return "BadStride";
    case Errc::OffsetTooLarge: return "OffsetTooLarge";
    case Errc::TooFewImages: return "TooFewImages";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::TooFewPixels: return "TooFewPixels";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::DistortionOutOfRange: return "DistortionOutOfRange";
    case Errc::InvalidCovariance: return "InvalidCovariance";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::FormatError: return "FormatError";
  }
  return "UnknownError";
}

HyperCube HyperCube::zeros(int rows, int cols, int bands,
                           std::vector<double> wavelengths) {
  HyperCube c;
  c.rows = rows;
  c.cols = cols;
  c.bands = bands;
  c.wavelengths_nm = std::move(wavelengths);
  c.data.assign(static_cast<std::size_t>(rows) * cols * bands, 0.0f);
  c.valid.assign(static_cast<std::size_t>(rows) * cols, 1);
  return c;
}

void HyperCube::set_invalid(int r, int c) {
  valid[pixel_index(r, c)] = 0;
  float* px = pixel(r, c);
  for (int b = 0; b < bands; ++b) px[b] = kFillValue;
}

std::size_t HyperCube::valid_pixel_count() const {
  std::size_t n = 0;
  for (std::uint8_t v : valid) n += (v != 0);
  return n;
}

void HyperCube::enforce_fill() {
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!is_valid(r, c)) {
        float* px = pixel(r, c);
        for (int b = 0; b < bands; ++b) px[b] = kFillValue;
      }
}

std::vector<int> selected_band_indices(const std::vector<double>& wl,
                                       const BandSelection& sel) {
  const int n = static_cast<int>(wl.size());
  std::vector<char> keep(n, 0);
  for (int i = 0; i < n; ++i)
    for (const auto& [lo, hi] : sel.ranges_nm)
      if (wl[i] >= lo && wl[i] <= hi) keep[i] = 1;
  for (double target : sel.rgb_targets_nm) {
    int best = -1;
    double best_d = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = std::abs(wl[i] - target);
      if (best < 0 || d < best_d) {  // ties keep the lower wavelength
        best = i;
        best_d = d;
      }
    }
    if (best >= 0) keep[best] = 1;
  }
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

HyperCube select_bands(const HyperCube& cube, const BandSelection& sel) {
  std::vector<int> idx = selected_band_indices(cube.wavelengths_nm, sel);
  if (idx.empty())
    throw Error(Errc::EmptySelection, "no band matches the selection");
  if (sel.expected_count && *sel.expected_count != static_cast<int>(idx.size()))
    throw Error(Errc::CountMismatch,
                "expected " + std::to_string(*sel.expected_count) +
                    " bands, selected " + std::to_string(idx.size()));

  HyperCube out;
  out.rows = cube.rows;
  out.cols = cube.cols;
  out.bands = static_cast<int>(idx.size());
  out.wavelengths_nm.reserve(idx.size());
  for (int i : idx) out.wavelengths_nm.push_back(cube.wavelengths_nm[i]);
  out.valid = cube.valid;
  out.data.resize(cube.pixel_count() * idx.size());
  for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
    const float* src = cube.data.data() + p * cube.bands;
    float* dst = out.data.data() + p * out.bands;
    for (std::size_t k = 0; k < idx.size(); ++k) dst[k] = src[idx[k]];
  }
  return out;
}

BandStats band_stats(const std::vector<const HyperCube*>& cubes) {
  if (cubes.empty()) throw Error(Errc::NoValidPixels, "no cubes given");
  const HyperCube& first = *cubes.front();
  for (const HyperCube* c : cubes)
    if (c->wavelengths_nm != first.wavelengths_nm)
      throw Error(Errc::WavelengthMismatch,
                  "cubes do not share an identical wavelength list");

  const int bands = first.bands;
  std::vector<double> sum(bands, 0.0);
  std::uint64_t n = 0;
  for (const HyperCube* c : cubes)
    for (int r = 0; r < c->rows; ++r)
      for (int col = 0; col < c->cols; ++col) {
        if (!c->is_valid(r, col)) continue;
        const float* px = c->pixel(r, col);
        for (int b = 0; b < bands; ++b) sum[b] += px[b];
        ++n;
      }
  if (n == 0) throw Error(Errc::NoValidPixels, "all pixels are invalid");

  BandStats st;
  st.pixel_count = n;
  st.mean.resize(bands);
  for (int b = 0; b < bands; ++b) st.mean[b] = sum[b] / static_cast<double>(n);

  std::vector<double> ssd(bands, 0.0);
  for (const HyperCube* c : cubes)
    for (int r = 0; r < c->rows; ++r)
      for (int col = 0; col < c->cols; ++col) {
        if (!c->is_valid(r, col)) continue;
        const float* px = c->pixel(r, col);
        for (int b = 0; b < bands; ++b) {
          double d = px[b] - st.mean[b];
          ssd[b] += d * d;
        }
      }
  st.stddev.resize(bands);
  for (int b = 0; b < bands; ++b)
    st.stddev[b] = std::sqrt(ssd[b] / static_cast<double>(n));
  return st;
}

HyperCube normalize(const HyperCube& cube, const BandStats& stats, double eps) {
  if (static_cast<int>(stats.mean.size()) != cube.bands)
    throw Error(Errc::BandCountMismatch,
                "stats have " + std::to_string(stats.mean.size()) +
                    " bands, cube has " + std::to_string(cube.bands));
  HyperCube out = cube;
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      if (!out.is_valid(r, c)) continue;
      float* px = out.pixel(r, c);
      for (int b = 0; b < out.bands; ++b) {
        double denom = std::max(stats.stddev[b], eps);
        px[b] = static_cast<float>((px[b] - stats.mean[b]) / denom);
      }
    }
  return out;
}

}  // namespace plumepipe
