#include "plumepipe/glt.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "plumepipe/error.hpp"

namespace plumepipe {

namespace {
constexpr char kMagic[8] = {'H', 'S', 'G', 'L', 'T', '0', '0', '1'};
}

Glt Glt::unmapped(int ortho_rows, int ortho_cols, int src_rows, int src_cols) {
  Glt g;
  g.ortho_rows = ortho_rows;
  g.ortho_cols = ortho_cols;
  g.src_rows = src_rows;
  g.src_cols = src_cols;
  g.sample.assign(static_cast<std::size_t>(ortho_rows) * ortho_cols, -1);
  g.line.assign(static_cast<std::size_t>(ortho_rows) * ortho_cols, -1);
  return g;
}

Glt Glt::identity(int rows, int cols) {
  Glt g = unmapped(rows, cols, rows, cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) g.set(y, x, x, y);
  return g;
}

void Glt::validate() const {
  for (int y = 0; y < ortho_rows; ++y)
    for (int x = 0; x < ortho_cols; ++x) {
      std::int32_t s = sample[index(y, x)];
      std::int32_t l = line[index(y, x)];
      if (s < 0 && l < 0) continue;
      if (s < 0 || l < 0 || s >= src_cols || l >= src_rows)
        throw Error(Errc::OutOfRangeEntry,
                    "GLT entry (" + std::to_string(s) + "," + std::to_string(l) +
                        ") at ortho (" + std::to_string(y) + "," +
                        std::to_string(x) + ") escapes the source grid");
    }
}

void write_glt(const std::string& path, const Glt& glt) {
  nlohmann::json hdr;
  hdr["ortho_rows"] = glt.ortho_rows;
  hdr["ortho_cols"] = glt.ortho_cols;
  hdr["src_rows"] = glt.src_rows;
  hdr["src_cols"] = glt.src_cols;
  hdr["sentinel"] = 0;
  const std::string h = hdr.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  f.write(kMagic, 8);
  std::uint32_t hlen = static_cast<std::uint32_t>(h.size());
  f.write(reinterpret_cast<const char*>(&hlen), 4);
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  std::vector<std::int32_t> payload;
  payload.reserve(glt.sample.size() * 2);
  for (std::size_t i = 0; i < glt.sample.size(); ++i) {
    payload.push_back(glt.sample[i] < 0 ? 0 : glt.sample[i] + 1);
    payload.push_back(glt.line[i] < 0 ? 0 : glt.line[i] + 1);
  }
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(std::int32_t)));
  if (!f) throw Error(Errc::IoError, "short write while emitting GLT");
}

Glt read_glt(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(Errc::FormatError, "bad GLT magic");
  std::uint32_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 4);
  std::string h(hlen, '\0');
  f.read(h.data(), hlen);
  if (!f) throw Error(Errc::FormatError, "truncated GLT header");
  nlohmann::json hdr = nlohmann::json::parse(h, nullptr, false);
  if (hdr.is_discarded())
    throw Error(Errc::FormatError, "GLT header is not valid JSON");

  Glt g = Glt::unmapped(hdr.at("ortho_rows").get<int>(),
                        hdr.at("ortho_cols").get<int>(),
                        hdr.at("src_rows").get<int>(),
                        hdr.at("src_cols").get<int>());
  std::vector<std::int32_t> payload(g.sample.size() * 2);
  f.read(reinterpret_cast<char*>(payload.data()),
         static_cast<std::streamsize>(payload.size() * sizeof(std::int32_t)));
  if (!f) throw Error(Errc::FormatError, "truncated GLT payload");
  for (std::size_t i = 0; i < g.sample.size(); ++i) {
    g.sample[i] = payload[2 * i] - 1;
    g.line[i] = payload[2 * i + 1] - 1;
  }
  g.validate();
  return g;
}

}  // namespace plumepipe
