#pragma once

namespace plumepipe {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace plumepipe
