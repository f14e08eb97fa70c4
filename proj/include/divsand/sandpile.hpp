#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "divsand/grid.hpp"
#include "divsand/kernels.hpp"
#include "divsand/sampler.hpp"

namespace divsand {

enum class OdometerMethod { Toppling, Spectral };

struct OdometerResult {
    ScalarField u;
    long rounds = 0;
    /// max_x |final mass - 1|.
    double residual = 0.0;
    OdometerMethod method = OdometerMethod::Toppling;
};

/// Called after every toppling round with the round number, the mass and the
/// odometer so far.
using ToppleObserver =
    std::function<void(long round, const std::vector<double>& s, const std::vector<double>& u)>;

inline constexpr long kDefaultMaxRounds = 10'000'000;

/// Parallel toppling: every site with mass above 1 keeps 1 and splits the
/// excess evenly among its 2d neighbours, all sites at once. Stops when the
/// largest excess is <= tol. The odometer is returned as accumulated, not
/// recentred. Throws StabilizationError after max_rounds.
OdometerResult stabilize_toppling(const SandpileConfig& config, double tol = 1e-12,
                                  long max_rounds = kDefaultMaxRounds,
                                  const ToppleObserver& observer = {});

/// Sequential toppling, one site at a time in an order reshuffled every sweep.
OdometerResult stabilize_sequential(const SandpileConfig& config, double tol,
                                    long max_sweeps, std::uint64_t shuffle_seed);

/// Solves Delta_g u = 1 - s in Fourier space and shifts so that min u = 0.
OdometerResult odometer_spectral(const SandpileConfig& config);

/// Green function with Fourier coefficients -2d n^{-d} lambda^{-1} e^{-2 pi i xi.x/n}
/// for xi != 0 and zero mean.
ScalarField green_function_zero_mean(const TorusGrid& grid, const Coord& x);

/// sum_{xi != 0} K^_n(xi) e^{2 pi i (x-y).xi/n} / lambda_xi^2 by direct summation.
double chi_covariance(const KernelSpec& kernel, const TorusGrid& grid, const Coord& x,
                      const Coord& y);

/// The same covariance as a function of the lag h = x - y, for every h.
ScalarField chi_covariance_table(const KernelSpec& kernel, const TorusGrid& grid);

/// (2d)^{-2} sum_{z,z'} K_n(z - z') g(z, x) g(z', y) with the zero-mean Green
/// function. n^d <= 4096.
double eta_covariance_bruteforce(const KernelSpec& kernel, const TorusGrid& grid, const Coord& x,
                                 const Coord& y);

}  // namespace divsand
