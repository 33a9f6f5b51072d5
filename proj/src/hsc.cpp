#include "plumepipe/hsc.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "plumepipe/error.hpp"

namespace plumepipe {

static_assert(std::endian::native == std::endian::little,
              "HSC/GLT writers assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'S', 'C', 'U', 'B', 'E', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void write_hsc(std::ostream& out, const HyperCube& cube,
               const std::map<std::string, std::string>& extra) {
  nlohmann::json hdr;
  hdr["rows"] = cube.rows;
  hdr["cols"] = cube.cols;
  hdr["bands"] = cube.bands;
  hdr["dtype"] = "f32le";
  hdr["interleave"] = "bip";
  hdr["wavelengths_nm"] = cube.wavelengths_nm;
  hdr["fill_value"] = "nan";
  hdr["has_mask"] = true;
  for (const auto& [k, v] : extra) hdr[k] = v;
  const std::string h = hdr.dump();

  out.write(kMagic, 8);
  write_u32(out, static_cast<std::uint32_t>(h.size()));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(reinterpret_cast<const char*>(cube.data.data()),
            static_cast<std::streamsize>(cube.data.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(cube.valid.data()),
            static_cast<std::streamsize>(cube.valid.size()));
  if (!out) throw Error(Errc::IoError, "short write while emitting HSC");
}

void write_hsc(const std::string& path, const HyperCube& cube,
               const std::map<std::string, std::string>& extra) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  write_hsc(f, cube, extra);
}

HyperCube read_hsc(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(Errc::FormatError, "bad HSC magic");
  std::uint32_t hlen = read_u32(in);
  std::string h(hlen, '\0');
  in.read(h.data(), hlen);
  if (!in) throw Error(Errc::FormatError, "truncated HSC header");

  nlohmann::json hdr = nlohmann::json::parse(h, nullptr, false);
  if (hdr.is_discarded())
    throw Error(Errc::FormatError, "HSC header is not valid JSON");
  HyperCube cube;
  cube.rows = hdr.at("rows").get<int>();
  cube.cols = hdr.at("cols").get<int>();
  cube.bands = hdr.at("bands").get<int>();
  if (hdr.at("dtype").get<std::string>() != "f32le" ||
      hdr.at("interleave").get<std::string>() != "bip")
    throw Error(Errc::FormatError, "unsupported HSC dtype/interleave");
  cube.wavelengths_nm = hdr.at("wavelengths_nm").get<std::vector<double>>();
  if (cube.rows < 0 || cube.cols < 0 || cube.bands <= 0 ||
      static_cast<int>(cube.wavelengths_nm.size()) != cube.bands)
    throw Error(Errc::FormatError, "inconsistent HSC dimensions");

  const std::size_t n =
      static_cast<std::size_t>(cube.rows) * cube.cols * cube.bands;
  cube.data.resize(n);
  in.read(reinterpret_cast<char*>(cube.data.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw Error(Errc::FormatError, "truncated HSC payload");

  bool has_mask = hdr.value("has_mask", false);
  if (has_mask) {
    cube.valid.resize(cube.pixel_count());
    in.read(reinterpret_cast<char*>(cube.valid.data()),
            static_cast<std::streamsize>(cube.valid.size()));
    if (!in) throw Error(Errc::FormatError, "truncated HSC validity section");
  } else {
    cube.valid.assign(cube.pixel_count(), 1);
    // Legacy sentinel fill: mark pixels equal to a finite fill value invalid.
    if (hdr.contains("fill_value") && hdr["fill_value"].is_number()) {
      float fill = hdr["fill_value"].get<float>();
      for (int r = 0; r < cube.rows; ++r)
        for (int c = 0; c < cube.cols; ++c) {
          const float* px = cube.pixel(r, c);
          bool all_fill = true;
          for (int b = 0; b < cube.bands && all_fill; ++b)
            all_fill = (px[b] == fill);
          if (all_fill) cube.valid[cube.pixel_index(r, c)] = 0;
        }
    }
  }
  cube.enforce_fill();
  return cube;
}

HyperCube read_hsc(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  return read_hsc(f);
}

std::uint64_t append_hsc(std::ostream& shard, const HyperCube& cube,
                         const std::map<std::string, std::string>& extra) {
  shard.seekp(0, std::ios::end);
  auto offset = static_cast<std::uint64_t>(shard.tellp());
  write_hsc(shard, cube, extra);
  return offset;
}

HyperCube read_hsc_at(const std::string& path, std::uint64_t offset) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  f.seekg(static_cast<std::streamoff>(offset));
  if (!f) throw Error(Errc::IoError, "cannot seek in " + path);
  return read_hsc(f);
}

}  // namespace plumepipe
