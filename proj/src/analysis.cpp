#include "divsand/analysis.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <type_traits>

#include "divsand/errors.hpp"

namespace divsand {

namespace {

constexpr double kPi = std::numbers::pi;

double euclid(const Coord& v) { return std::sqrt(static_cast<double>(norm_sq(v))); }

// Per-axis box factor: sin(pi xi/n)/(pi xi), 1/n at xi = 0, exactly 0 when
// xi is a nonzero multiple of n.
double box_factor(int xi, int n) {
    if (xi == 0) return 1.0 / n;
    if (xi % n == 0) return 0.0;
    return std::sin(kPi * xi / n) / (kPi * xi);
}

double box_weight(const Coord& xi, int dim, int n) {
    double t = 1.0;
    for (int k = 0; k < dim; ++k) t *= box_factor(xi[k], n);
    return t;
}

Complex lattice_phase(const Coord& xi, const Coord& z, int dim, int n) {
    long long dot = 0;
    for (int k = 0; k < dim; ++k) dot += static_cast<long long>(xi[k]) * z[k];
    const long long r = ((dot % n) + n) % n;
    const double a = 2.0 * kPi * static_cast<double>(r) / n;
    return {std::cos(a), std::sin(a)};
}

Coord wrapped(const TorusGrid& grid, const Coord& xi) {
    Coord w{};
    for (int k = 0; k < grid.dim(); ++k) w[k] = grid.wrap(xi[k]);
    return w;
}

void require_same_dim(const TorusGrid& grid, const TestFunction& f) {
    if (grid.dim() != f.dim()) {
        throw ValidationError("test function has dimension " + std::to_string(f.dim()) +
                              ", grid has " + std::to_string(grid.dim()));
    }
}

void require_no_alias(const TestFunction& f, int n) {
    if (2 * f.max_frequency() >= n) {
        throw ValidationError("test function frequency " + std::to_string(f.max_frequency()) +
                              " aliases on Z_n^d with n=" + std::to_string(n) +
                              " (need n > 2 max|nu_i|)");
    }
}

// Runs body(r) for r in [0, count) over OpenMP threads and rethrows the
// first failure in replicate order.
template <class Body>
void parallel_replicates(long count, int threads, Body&& body) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
    for (long r = 0; r < count; ++r) {
        try {
            body(r);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

TestFunction::TestFunction(int dim, std::map<Coord, Complex> modes)
    : dim_(dim), modes_(std::move(modes)) {
    if (dim < 1 || dim > kMaxDim) throw ValidationError("test function dimension out of range");
    for (const auto& [nu, c] : modes_) {
        for (int k = dim; k < kMaxDim; ++k) {
            if (nu[k] != 0) throw ValidationError("test function frequency has too many coordinates");
        }
        if (norm_sq(nu) == 0) {
            throw ValidationError("test function must have zero mean (no nu = 0 mode)");
        }
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw ValidationError("test function coefficient is not finite");
        }
        auto it = modes_.find(negated(nu));
        const double tol = 1e-12 * std::max(1.0, std::abs(c));
        if (it == modes_.end() || std::abs(it->second - std::conj(c)) > tol) {
            throw ValidationError("test function is not real: c_{-nu} != conj(c_nu) at nu = " +
                                  format_coord(nu, dim));
        }
    }
}

TestFunction TestFunction::cosine(int dim, const Coord& nu, double amplitude) {
    return TestFunction(dim, {{nu, amplitude}, {negated(nu), amplitude}});
}

int TestFunction::max_frequency() const {
    int m = 0;
    for (const auto& [nu, c] : modes_) {
        for (int k = 0; k < dim_; ++k) m = std::max(m, std::abs(nu[k]));
    }
    return m;
}

double TestFunction::operator()(const std::array<double, kMaxDim>& x) const {
    double acc = 0.0;
    for (const auto& [nu, c] : modes_) {
        double dot = 0.0;
        for (int k = 0; k < dim_; ++k) dot += nu[k] * x[k];
        acc += (c * std::polar(1.0, 2.0 * kPi * dot)).real();
    }
    return acc;
}

TestFunction TestFunction::scaled(double alpha) const {
    std::map<Coord, Complex> m;
    for (const auto& [nu, c] : modes_) m.emplace(nu, alpha * c);
    return TestFunction(dim_, std::move(m));
}

Complex box_integral(const TorusGrid& grid, const Coord& xi, const Coord& z) {
    return lattice_phase(xi, z, grid.dim(), grid.side()) * box_weight(xi, grid.dim(), grid.side());
}

double pair_odometer(const ScalarField& u, const TestFunction& f, double scaling) {
    const TorusGrid& grid = u.grid();
    require_same_dim(grid, f);
    const Spectrum uhat = dft_forward(u);
    const double total = static_cast<double>(grid.total());
    Complex acc = 0.0;
    for (const auto& [nu, c] : f.modes()) {
        const double t = box_weight(nu, grid.dim(), grid.side());
        if (t == 0.0) continue;
        // sum_z u(z) e^{2 pi i nu.z/n} = n^d u^(-nu).
        acc += c * t * total * uhat.at(wrapped(grid, negated(nu)));
    }
    return scaling * acc.real();
}

double pair_odometer(const OdometerResult& u, const TestFunction& f, double scaling) {
    return pair_odometer(u.u, f, scaling);
}

double pair_odometer_midpoint(const ScalarField& u, const TestFunction& f, double scaling) {
    const TorusGrid& grid = u.grid();
    require_same_dim(grid, f);
    double acc = 0.0;
    for_each_site(grid, [&](std::size_t idx, const Coord& z) {
        Complex fz = 0.0;
        for (const auto& [nu, c] : f.modes()) fz += c * lattice_phase(nu, z, grid.dim(), grid.side());
        acc += u[idx] * fz.real();
    });
    return scaling * acc / static_cast<double>(grid.total());
}

double quadrature_error_sup(const TestFunction& f, int side) {
    const TorusGrid grid(f.dim(), side);
    const double total = static_cast<double>(grid.total());
    double worst = 0.0;
    for_each_site(grid, [&](std::size_t, const Coord& z) {
        Complex e = 0.0;
        for (const auto& [nu, c] : f.modes()) {
            const double t = box_weight(nu, grid.dim(), side);
            e += c * lattice_phase(nu, z, grid.dim(), side) * (total * t - 1.0);
        }
        worst = std::max(worst, std::abs(e.real()));
    });
    return worst;
}

double scaling_constant(int dim, int side, ScalingMode mode, std::optional<double> ck) {
    if (dim < 1 || side < 1) throw ValidationError("scaling constant needs d >= 1 and n >= 1");
    const double base = 4.0 * kPi * kPi / (2.0 * dim);
    const double n = side;
    if (mode == ScalingMode::Standard) return base / (n * n);
    if (!ck || !(*ck > 0.0)) {
        throw ValidationError("bi-Laplacian scaling b_n needs a positive summed kernel constant C_K");
    }
    return base * std::pow(n, 0.5 * (dim - 4)) / std::sqrt(*ck);
}

double scaling_constant(const TorusGrid& grid, ScalingMode mode, std::optional<double> ck) {
    return scaling_constant(grid.dim(), grid.side(), mode, ck);
}

double limit_weight(const KernelSpec& kernel, ScalingMode mode, const Coord& xi) {
    if (mode == ScalingMode::Bilap) return 1.0;
    return limit_multiplier(kernel, xi);
}

double limit_norm(const TestFunction& f, const KernelSpec& kernel, ScalingMode mode) {
    double acc = 0.0;
    for (const auto& [nu, c] : f.modes()) {
        const double r2 = static_cast<double>(norm_sq(nu));
        acc += limit_weight(kernel, mode, nu) / (r2 * r2) * std::norm(c);
    }
    return acc;
}

double finite_n_variance(const TestFunction& f, const KernelSpec& kernel, const TorusGrid& grid,
                         ScalingMode mode, std::optional<double> ck) {
    require_same_dim(grid, f);
    require_no_alias(f, grid.side());
    double factor = 1.0;
    if (mode == ScalingMode::Bilap) {
        if (!ck) ck = summed_kernel_constant(kernel, grid);
        if (!(*ck > 0.0)) throw ValidationError("bi-Laplacian variance needs C_K > 0");
        factor = static_cast<double>(grid.total()) / *ck;
    }
    const double n = grid.side();
    double acc = 0.0;
    for (const auto& [nu, c] : f.modes()) {
        double s2 = 0.0;
        for (int k = 0; k < grid.dim(); ++k) {
            const double sn = std::sin(kPi * nu[k] / n);
            s2 += sn * sn;
        }
        acc += factor * multiplier(kernel, grid, nu) * std::norm(c) / (s2 * s2);
    }
    return std::pow(kPi, 4) / std::pow(n, 4) * acc;
}

MomentSummary summarize(const std::vector<double>& values) {
    MomentSummary out;
    const auto m = static_cast<double>(values.size());
    if (values.empty()) return out;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= m;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    out.mean = mean;
    out.variance = values.size() > 1 ? m2 / (m - 1.0) : 0.0;
    m2 /= m;
    m3 /= m;
    m4 /= m;
    if (m2 > 0.0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

std::vector<double> pairing_samples(const KernelSpec& kernel, const TorusGrid& grid,
                                    const TestFunction& f, ScalingMode mode, long replicates,
                                    std::uint64_t seed, const MonteCarloOptions& options) {
    require_same_dim(grid, f);
    if (replicates < 1) throw ValidationError("replicates must be positive");
    std::optional<double> ck;
    if (mode == ScalingMode::Bilap) ck = summed_kernel_constant(kernel, grid);
    const double scaling = scaling_constant(grid, mode, ck);
    const double sigma_exponent = mode == ScalingMode::Bilap ? 0.5 * grid.dim() : 0.0;
    const SigmaSampler sampler(kernel, grid, SamplerOptions{options.psd_repair});

    std::vector<double> values(static_cast<std::size_t>(replicates));
    parallel_replicates(replicates, options.threads, [&](long r) {
        ScalarField sigma = sampler.sample(RngStream{seed, static_cast<std::uint64_t>(r)});
        if (sigma_exponent != 0.0) sigma = rescaled_sigma(sigma, sigma_exponent);
        const OdometerResult odo = odometer_spectral(initial_configuration(sigma));
        values[static_cast<std::size_t>(r)] = pair_odometer(odo, f, scaling);
    });
    return values;
}

VarianceReport monte_carlo_pairing(const KernelSpec& kernel, const TorusGrid& grid,
                                   const TestFunction& f, ScalingMode mode, long replicates,
                                   std::uint64_t seed, const MonteCarloOptions& options) {
    if (replicates < 100) throw ValidationError("Monte Carlo pairing needs at least 100 replicates");
    VarianceReport rep;
    rep.n = grid.side();
    rep.replicates = replicates;
    rep.finite_n = finite_n_variance(f, kernel, grid, mode);
    rep.limit = limit_norm(f, kernel, mode);

    const auto values = pairing_samples(kernel, grid, f, mode, replicates, seed, options);
    const MomentSummary s = summarize(values);
    const auto m = static_cast<double>(replicates);
    rep.mc_mean = s.mean;
    rep.mc_var = s.variance;
    rep.mc_stderr = std::sqrt(2.0 / (m - 1.0)) * s.variance;
    rep.mc_mean_stderr = std::sqrt(s.variance / m);
    rep.skewness = s.skewness;
    rep.excess_kurtosis = s.excess_kurtosis;
    return rep;
}

double default_epsilon(int dim) { return 0.5 * dim + 1.25; }

SobolevEstimate sobolev_norm_sq(const ScalarField& u, const KernelSpec& kernel, double epsilon,
                                SobolevExponent exponent, int cutoff, double scaling,
                                ScalingMode mode) {
    const TorusGrid& grid = u.grid();
    const int d = grid.dim();
    const double threshold = std::max(0.5 * d, 0.25 * d + 1.0);
    if (!(epsilon > threshold)) {
        throw ValidationError("epsilon must satisfy eps > max{d/2, d/4 + 1} = " +
                              std::to_string(threshold) + ", got " + std::to_string(epsilon));
    }
    if (cutoff < 1) throw ValidationError("cutoff must be at least 1");
    const double p = exponent == SobolevExponent::Full ? 4.0 * epsilon : 2.0 * epsilon;
    const Spectrum uhat = dft_forward(u);
    const double total = static_cast<double>(grid.total());
    const long long r2max = static_cast<long long>(cutoff) * cutoff;

    double value = 0.0;
    const TorusGrid cube(d, 2 * cutoff + 1);
    for_each_site(cube, [&](std::size_t, const Coord& xi) {
        const long long r2 = norm_sq(xi);
        if (r2 == 0 || r2 > r2max) return;
        const double t = box_weight(xi, d, grid.side());
        if (t == 0.0) return;
        const double coeff = scaling * total * t * std::abs(uhat.at(wrapped(grid, xi)));
        value += limit_weight(kernel, mode, xi) *
                 std::pow(static_cast<double>(r2), -0.5 * p) * coeff * coeff;
    });

    // Every coefficient is bounded by scaling n^{-d} sum |u - mean u|, the shell
    // k < |xi| <= k+1 holds at most A_d k^{d-1} lattice points, and the weight
    // beyond the cutoff is bounded by its supremum there.
    const double mean = u.mean();
    double l1 = 0.0;
    for (double v : u.values()) l1 += std::abs(v - mean);
    const double coeff_sup = scaling * l1 / total;

    double weight_sup = 1.0;
    if (mode == ScalingMode::Standard) {
        weight_sup = std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, FractionalSpectral> ||
                              std::is_same_v<T, DirectMultiplier>) {
                    return k.s >= 0.0 ? std::pow(static_cast<double>(cutoff), -4.0 * k.s)
                                      : std::numeric_limits<double>::infinity();
                } else if constexpr (std::is_same_v<T, Table>) {
                    double sup = 0.0;
                    for (const auto& [xi, v] : k.values) {
                        if (norm_sq(xi) > r2max) sup = std::max(sup, v);
                    }
                    return sup;
                } else {
                    return limit_multiplier(k, Coord{1});
                }
            },
            kernel);
    }

    const double omega = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    const double half_diag = 0.5 * std::sqrt(static_cast<double>(d));
    const double kc = cutoff;
    const double shell = omega *
                         (std::pow(kc + 1.0 + half_diag, d) -
                          std::pow(std::max(0.0, kc - half_diag), d)) /
                         std::pow(kc, d - 1);
    const double q = d - 1.0 - p;
    const long kmax = 100000;
    double series = 0.0;
    for (long k = kmax; k >= cutoff; --k) series += std::pow(static_cast<double>(k), q);
    series += std::pow(static_cast<double>(kmax), q + 1.0) / (-(q + 1.0));

    SobolevEstimate est;
    est.epsilon = epsilon;
    est.cutoff = cutoff;
    est.value = value;
    est.n = grid.side();
    est.tail_bound = weight_sup * coeff_sup * coeff_sup * shell * series;
    return est;
}

TestFunction fractional_laplacian_continuum(const TestFunction& f, double a) {
    std::map<Coord, Complex> m;
    for (const auto& [nu, c] : f.modes()) m.emplace(nu, std::pow(euclid(nu), 2.0 * a) * c);
    return TestFunction(f.dim(), std::move(m));
}

double l2_norm_sq(const TestFunction& f) {
    double acc = 0.0;
    for (const auto& [nu, c] : f.modes()) acc += std::norm(c);
    return acc;
}

std::vector<SweepRow> convergence_sweep(const TestFunction& f, const KernelSpec& kernel,
                                        ScalingMode mode, const std::vector<int>& sides) {
    const double limit = limit_norm(f, kernel, mode);
    std::vector<SweepRow> rows;
    for (int n : sides) {
        const TorusGrid grid(f.dim(), n);
        SweepRow row;
        row.n = n;
        row.finite_n = finite_n_variance(f, kernel, grid, mode);
        row.limit = limit;
        row.gap = std::abs(row.finite_n - limit);
        rows.push_back(row);
    }
    return rows;
}

TightnessRow tightness_proxy(const KernelSpec& kernel, int dim, int side, long replicates,
                             std::uint64_t seed, double epsilon, int cutoff,
                             SobolevExponent exponent, const MonteCarloOptions& options) {
    if (replicates < 1) throw ValidationError("replicates must be positive");
    const TorusGrid grid(dim, side);
    const double scaling = scaling_constant(grid, ScalingMode::Standard);
    const SigmaSampler sampler(kernel, grid, SamplerOptions{options.psd_repair});
    std::vector<SobolevEstimate> est(static_cast<std::size_t>(replicates));
    parallel_replicates(replicates, options.threads, [&](long r) {
        const ScalarField sigma = sampler.sample(RngStream{seed, static_cast<std::uint64_t>(r)});
        const OdometerResult odo = odometer_spectral(initial_configuration(sigma));
        est[static_cast<std::size_t>(r)] =
            sobolev_norm_sq(odo.u, kernel, epsilon, exponent, cutoff, scaling);
    });

    TightnessRow row;
    row.n = side;
    row.replicates = replicates;
    std::vector<double> values;
    for (const auto& e : est) {
        values.push_back(e.value);
        row.max_tail_bound = std::max(row.max_tail_bound, e.tail_bound);
        if (e.value > 0.0) row.max_tail_ratio = std::max(row.max_tail_ratio, e.tail_bound / e.value);
    }
    const MomentSummary s = summarize(values);
    row.mean = s.mean;
    row.stderr_mean = std::sqrt(s.variance / static_cast<double>(replicates));
    return row;
}

}  // namespace divsand
