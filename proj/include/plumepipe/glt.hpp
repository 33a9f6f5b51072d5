#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plumepipe {

// Geometric lookup table: for each orthorectified pixel, the source-plane
// (unorthorectified) pixel that supplies its value. In memory the unmapped
// sentinel is -1; on disk entries are one-based with 0 meaning unmapped,
// mirroring EMIT GLT products.
struct Glt {
  int ortho_rows = 0;
  int ortho_cols = 0;
  int src_rows = 0;
  int src_cols = 0;
  std::vector<std::int32_t> sample;  // ortho_rows*ortho_cols, column in source
  std::vector<std::int32_t> line;    // ortho_rows*ortho_cols, row in source

  static Glt unmapped(int ortho_rows, int ortho_cols, int src_rows, int src_cols);
  static Glt identity(int rows, int cols);

  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * ortho_cols + x;
  }
  bool mapped(int y, int x) const { return sample[index(y, x)] >= 0; }
  void set(int y, int x, int src_sample, int src_line) {
    sample[index(y, x)] = src_sample;
    line[index(y, x)] = src_line;
  }

  // Throws OutOfRangeEntry if any non-sentinel entry escapes the source grid.
  void validate() const;
};

// GLT container:
//   "HSGLT001" | u32 LE header length | JSON header
//   {"ortho_rows","ortho_cols","src_rows","src_cols","sentinel":0} |
//   ortho_rows*ortho_cols i32 LE pairs (src_sample_plus_1, src_line_plus_1),
//   0 meaning unmapped.
void write_glt(const std::string& path, const Glt& glt);
Glt read_glt(const std::string& path);

}  // namespace plumepipe
