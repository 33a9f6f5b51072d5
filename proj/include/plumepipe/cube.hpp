#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace plumepipe {

constexpr float kFillValue = std::numeric_limits<float>::quiet_NaN();

// Binary masks travel as single-band cubes of 0.0/1.0 floats.
inline bool mask_positive(float v) { return v > 0.5f; }

// Band-interleaved-by-pixel radiance raster with per-band center wavelengths
// and a per-pixel validity mask. Pixels with valid == 0 carry the fill value
// (quiet NaN) in every band; validity is tracked by the mask, never by
// sentinel comparison on radiance.
struct HyperCube {
  int rows = 0;
  int cols = 0;
  int bands = 0;
  std::vector<double> wavelengths_nm;  // size == bands, strictly increasing
  std::vector<float> data;             // rows*cols*bands, BIP order
  std::vector<std::uint8_t> valid;     // rows*cols, 1 = valid

  static HyperCube zeros(int rows, int cols, int bands,
                         std::vector<double> wavelengths);

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t pixel_index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols + c;
  }
  float* pixel(int r, int c) { return data.data() + pixel_index(r, c) * bands; }
  const float* pixel(int r, int c) const {
    return data.data() + pixel_index(r, c) * bands;
  }
  float& at(int r, int c, int b) { return data[pixel_index(r, c) * bands + b]; }
  float at(int r, int c, int b) const {
    return data[pixel_index(r, c) * bands + b];
  }
  bool is_valid(int r, int c) const { return valid[pixel_index(r, c)] != 0; }
  void set_invalid(int r, int c);
  std::size_t valid_pixel_count() const;

  // Re-applies the fill value to every invalid pixel.
  void enforce_fill();
};

// Inclusive wavelength intervals plus nearest-match RGB targets.
struct BandSelection {
  std::vector<std::pair<double, double>> ranges_nm;
  std::vector<double> rgb_targets_nm;
  std::optional<int> expected_count;
};

struct BandStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population (divisor N)
  std::uint64_t pixel_count = 0;
};

// Indices (ascending, deduplicated) of bands inside any interval, plus the
// nearest band to each RGB target (ties to the lower wavelength).
std::vector<int> selected_band_indices(const std::vector<double>& wavelengths_nm,
                                       const BandSelection& sel);

HyperCube select_bands(const HyperCube& cube, const BandSelection& sel);

BandStats band_stats(const std::vector<const HyperCube*>& cubes);

HyperCube normalize(const HyperCube& cube, const BandStats& stats,
                    double eps = 1e-6);

}  // namespace plumepipe
