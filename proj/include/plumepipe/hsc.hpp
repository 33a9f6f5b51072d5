#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "plumepipe/cube.hpp"

namespace plumepipe {

// HSC cube container:
//   "HSCUBE01" | u32 LE header length | UTF-8 JSON header |
//   rows*cols*bands f32 LE in BIP order |
//   optional u8 validity plane, row-major, present iff header "has_mask":true.
// Header keys: rows, cols, bands, dtype ("f32le"), interleave ("bip"),
// wavelengths_nm, fill_value (number or the string "nan"), has_mask, plus
// free-form extras such as "units".

void write_hsc(std::ostream& out, const HyperCube& cube,
               const std::map<std::string, std::string>& extra = {});
void write_hsc(const std::string& path, const HyperCube& cube,
               const std::map<std::string, std::string>& extra = {});

HyperCube read_hsc(std::istream& in);
HyperCube read_hsc(const std::string& path);

// Shards are plain concatenations of HSC blobs; the returned offset is the
// byte position of the appended blob's magic.
std::uint64_t append_hsc(std::ostream& shard, const HyperCube& cube,
                         const std::map<std::string, std::string>& extra = {});
HyperCube read_hsc_at(const std::string& path, std::uint64_t offset);

}  // namespace plumepipe
