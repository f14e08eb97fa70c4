#pragma once

#include <array>
#include <string>

namespace divsand {

inline constexpr int kMaxDim = 4;

/// Integer lattice point or frequency. Entries past the grid dimension are
/// kept at zero, so norms and dot products may run over all kMaxDim slots.
using Coord = std::array<int, kMaxDim>;

/// Squared Euclidean norm.
inline long long norm_sq(const Coord& v) {
    long long acc = 0;
    for (int c : v) acc += static_cast<long long>(c) * c;
    return acc;
}

inline Coord negated(const Coord& v) {
    Coord out{};
    for (int i = 0; i < kMaxDim; ++i) out[i] = -v[i];
    return out;
}

/// "(1,-2)" style rendering of the first `dim` entries.
std::string format_coord(const Coord& v, int dim);

}  // namespace divsand
