#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "divsand/grid.hpp"

namespace divsand {

/// Binary grid file: "DSGF", u32 version (1), u32 d, u64 n, then n^d
/// float64 values in site storage order. All integers little-endian.
inline constexpr std::uint32_t kDsgfVersion = 1;

void write_dsgf(std::ostream& os, const ScalarField& field);
void write_dsgf(const std::filesystem::path& path, const ScalarField& field);

/// Throws ValidationError on wrong magic, version, size or truncation.
ScalarField read_dsgf(std::istream& is);
ScalarField read_dsgf(const std::filesystem::path& path);

}  // namespace divsand
