#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "divsand/grid.hpp"

namespace divsand::detail {

/// Unnormalised in-place DFT in FFTW's natural ordering (element j along an
/// axis holds coordinate j mod n). sign = -1 forward, +1 backward.
void fft_inplace(std::span<std::complex<double>> data, int dim, int side, int sign);

/// perm[centered index] = natural index, cached per grid shape.
const std::vector<std::size_t>& natural_order(const TorusGrid& grid);

}  // namespace divsand::detail
