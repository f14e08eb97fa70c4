#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "divsand/grid.hpp"

namespace divsand {

/// K_n(z) = 1_{z=0}; multiplier n^{-d}.
struct WhiteNoise {};

/// K(z) = diagonal at z = 0 and sign * |z|^{-exponent} elsewhere, with the
/// minimum-image Euclidean norm on the torus.
struct PowerLaw {
    int sign = 1;
    double diagonal = 7.0;
    double exponent = 3.0;
};

/// Multiplier of a_n^{2s} (-Delta_g)^{-2s}: (2d n^2 / 4 pi^2)^{-2s} (-lambda)^{-2s}.
struct FractionalSpectral {
    double s = 0.5;
    double zero_mode = 1.0;
};

/// Multiplier |xi|^{-4s} for xi != 0, zero_mode at xi = 0.
struct DirectMultiplier {
    double s = 0.5;
    double zero_mode = 1.0;
};

/// Explicit multiplier values by frequency. Treated as n-independent, so the
/// same entries serve as the declared limit.
struct Table {
    std::map<Coord, double> values;

    /// Constant multiplier c on every frequency of `grid`.
    static Table constant(const TorusGrid& grid, double c);
};

using KernelSpec = std::variant<WhiteNoise, PowerLaw, FractionalSpectral, DirectMultiplier, Table>;

std::string kernel_name(const KernelSpec& kernel);

/// Reads a Table from CSV rows "xi_1,...,xi_d,value"; a non-numeric first
/// line is treated as a header.
Table load_table_csv(const std::filesystem::path& path, int dim);

/// Stationary kernel of a PowerLaw kernel at lattice offset z (no wrapping).
double power_law_value(const PowerLaw& kernel, const Coord& z, int dim);

/// Closed form of the FractionalSpectral multiplier given -lambda_xi.
double fractional_spectral_multiplier(double neg_lambda, int dim, int side, double s);

/// K^_n(xi). Throws KernelInvalidError when the value is not strictly positive.
double multiplier(const KernelSpec& kernel, const TorusGrid& grid, const Coord& xi);

/// Every multiplier value in frequency storage order, without positivity
/// checks. Table kernels missing a frequency raise ValidationError.
std::vector<double> multiplier_table(const KernelSpec& kernel, const TorusGrid& grid);

/// K_n(z) = sum_xi K^_n(xi) psi_xi(z), exactly even in z.
ScalarField kernel_table(const KernelSpec& kernel, const TorusGrid& grid);

struct PSDReport {
    bool is_valid = false;
    double min_multiplier = 0.0;
    std::optional<Coord> offending_frequency;
    std::optional<double> min_eigenvalue_bruteforce;
    /// Positive and symmetric on every nonzero frequency, i.e. a valid
    /// covariance for the mean-zero part sigma - mean(sigma).
    bool valid_on_zero_mean = false;
    std::size_t nonpositive_modes = 0;
    double max_asymmetry = 0.0;
};

/// Discrete Bochner check. brute_force additionally diagonalises the dense
/// n^d x n^d covariance matrix; it requires n^d <= 4096.
PSDReport validate(const KernelSpec& kernel, const TorusGrid& grid, bool brute_force);

/// Minimum eigenvalue of the dense matrix K_n(x - y) built from an arbitrary
/// multiplier table by direct summation (no FFT). n^d <= 4096.
double bruteforce_min_eigenvalue(const TorusGrid& grid, const std::vector<double>& multipliers);

/// lim_n K^_n(xi) for xi != 0. WhiteNoise and PowerLaw tend to zero and
/// raise ZeroLimitError.
double limit_multiplier(const KernelSpec& kernel, const Coord& xi);

struct LimitEstimate {
    double value = 0.0;
    /// Observed convergence order in n; 0 when the value is exact.
    double order = 0.0;
    bool estimate = false;
};

/// lim_n n^d K^_n(xi), the multiplier of the rescaled weights n^{d/2} sigma.
/// Exact for WhiteNoise; Richardson-extrapolated from n = 32, 64, 128 for
/// PowerLaw.
LimitEstimate rescaled_limit_multiplier(const KernelSpec& kernel, int dim, const Coord& xi);

/// C_K = sum_z K(z) over the window |z_i| <= floor(n/2). Throws if the kernel
/// has no summable table or the sum vanishes.
double summed_kernel_constant(const KernelSpec& kernel, const TorusGrid& grid);

/// max over xi and the listed sides of K^_n(xi).
double multiplier_sup(const KernelSpec& kernel, int dim, const std::vector<int>& sides);

enum class FracDirection {
    Forward,  ///< multiply by (-lambda)^{+s}
    Inverse,  ///< multiply by (-lambda)^{-s}
};

/// Spectral discrete fractional Laplacian on mean-zero input.
Spectrum fractional_laplacian_discrete(const Spectrum& spec, double s, FracDirection dir);
ScalarField fractional_laplacian_discrete(const ScalarField& field, double s, FracDirection dir);

}  // namespace divsand
