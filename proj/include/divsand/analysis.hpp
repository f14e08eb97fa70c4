#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "divsand/grid.hpp"
#include "divsand/kernels.hpp"
#include "divsand/sampler.hpp"
#include "divsand/sandpile.hpp"

namespace divsand {

/// Real mean-zero trigonometric polynomial f(x) = sum_nu c_nu e^{2 pi i nu.x}
/// on the unit torus.
class TestFunction {
  public:
    /// Throws ValidationError if a zero mode is present or c_{-nu} != conj(c_nu).
    TestFunction(int dim, std::map<Coord, Complex> modes);

    /// amplitude * 2cos(2 pi nu.x), i.e. c_{+nu} = c_{-nu} = amplitude.
    static TestFunction cosine(int dim, const Coord& nu, double amplitude = 1.0);

    int dim() const { return dim_; }
    const std::map<Coord, Complex>& modes() const { return modes_; }
    /// Largest |nu_i| over the support.
    int max_frequency() const;

    double operator()(const std::array<double, kMaxDim>& x) const;
    TestFunction scaled(double alpha) const;

  private:
    int dim_;
    std::map<Coord, Complex> modes_;
};

/// Integral of e^{2 pi i xi.x} over the box of side 1/n centred at z/n.
Complex box_integral(const TorusGrid& grid, const Coord& xi, const Coord& z);

/// scaling * sum_z u(z) int_{B(z/n, 1/2n)} f.
double pair_odometer(const ScalarField& u, const TestFunction& f, double scaling);
double pair_odometer(const OdometerResult& u, const TestFunction& f, double scaling);

/// Midpoint rule: scaling * n^{-d} sum_z u(z) f(z/n).
double pair_odometer_midpoint(const ScalarField& u, const TestFunction& f, double scaling);

/// sup_z |E_n(z)| with E_n(z) = n^d int_{B(z/n, 1/2n)} f - f(z/n).
double quadrature_error_sup(const TestFunction& f, int side);

enum class ScalingMode {
    Standard,  ///< a_n with the kernel's own limit multiplier
    Bilap,     ///< b_n, weights n^{d/2} sigma, limit multiplier 1
};

/// a_n = 4 pi^2 (2d)^{-1} n^{-2}; b_n = 4 pi^2 (2d)^{-1} n^{(d-4)/2} C_K^{-1/2}.
double scaling_constant(int dim, int side, ScalingMode mode, std::optional<double> ck = {});
double scaling_constant(const TorusGrid& grid, ScalingMode mode, std::optional<double> ck = {});

/// Weight of frequency xi != 0 in the limiting norm.
double limit_weight(const KernelSpec& kernel, ScalingMode mode, const Coord& xi);

/// sum_nu W(nu) |nu|^{-4} |c_nu|^2.
double limit_norm(const TestFunction& f, const KernelSpec& kernel,
                  ScalingMode mode = ScalingMode::Standard);

/// pi^4 n^{-4} sum_xi W_n(xi) |f^_n(xi)|^2 / (sum_i sin^2(pi xi_i/n))^2 with
/// W_n = K^_n (standard) or n^d K^_n / C_K (bilap). Throws on aliasing.
double finite_n_variance(const TestFunction& f, const KernelSpec& kernel, const TorusGrid& grid,
                         ScalingMode mode = ScalingMode::Standard, std::optional<double> ck = {});

struct VarianceReport {
    int n = 0;
    double finite_n = 0.0;
    double limit = 0.0;
    double mc_mean = 0.0;
    double mc_var = 0.0;
    /// Standard error of mc_var, sqrt(2/(M-1)) mc_var.
    double mc_stderr = 0.0;
    double mc_mean_stderr = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    long replicates = 0;
};

struct MonteCarloOptions {
    PsdRepair psd_repair = PsdRepair::None;
    /// 0 uses the OpenMP default.
    int threads = 0;
};

/// Sample summary statistics of a set of replicate values.
struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};
MomentSummary summarize(const std::vector<double>& values);

/// Replicate values of the pairing <scaling * u, f> through the pipeline
/// sigma -> s -> spectral odometer, replicate r on stream (seed, r).
std::vector<double> pairing_samples(const KernelSpec& kernel, const TorusGrid& grid,
                                    const TestFunction& f, ScalingMode mode, long replicates,
                                    std::uint64_t seed, const MonteCarloOptions& options = {});

VarianceReport monte_carlo_pairing(const KernelSpec& kernel, const TorusGrid& grid,
                                   const TestFunction& f, ScalingMode mode, long replicates,
                                   std::uint64_t seed, const MonteCarloOptions& options = {});

enum class SobolevExponent {
    Full,  ///< |xi|^{-4 eps}
    Half,  ///< |xi|^{-2 eps}
};

struct SobolevEstimate {
    double epsilon = 0.0;
    int cutoff = 0;
    double value = 0.0;
    int n = 0;
    /// Upper bound on the frequencies left out by the cutoff.
    double tail_bound = 0.0;
};

/// d/2 + 1.25.
double default_epsilon(int dim);

/// sum_{0 < |xi| <= cutoff} W(xi) |xi|^{-p} |<scaling * u, phi_xi>|^2, with u
/// extended piecewise constant over boxes. Throws unless
/// eps > max{d/2, d/4 + 1}.
SobolevEstimate sobolev_norm_sq(const ScalarField& u, const KernelSpec& kernel, double epsilon,
                                SobolevExponent exponent, int cutoff, double scaling,
                                ScalingMode mode = ScalingMode::Standard);

/// c_nu <- |nu|^{2a} c_nu.
TestFunction fractional_laplacian_continuum(const TestFunction& f, double a);

/// sum_nu |c_nu|^2.
double l2_norm_sq(const TestFunction& f);

struct SweepRow {
    int n = 0;
    double finite_n = 0.0;
    double limit = 0.0;
    double gap = 0.0;
};

std::vector<SweepRow> convergence_sweep(const TestFunction& f, const KernelSpec& kernel,
                                        ScalingMode mode, const std::vector<int>& sides);

struct TightnessRow {
    int n = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double max_tail_bound = 0.0;
    /// Largest ratio tail_bound / value over the replicates.
    double max_tail_ratio = 0.0;
    long replicates = 0;
};

/// Mean Sobolev norm of the a_n-scaled odometer over replicates at one side.
TightnessRow tightness_proxy(const KernelSpec& kernel, int dim, int side, long replicates,
                             std::uint64_t seed, double epsilon, int cutoff,
                             SobolevExponent exponent, const MonteCarloOptions& options = {});

}  // namespace divsand
