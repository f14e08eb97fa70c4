#include "divsand/sandpile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "divsand/errors.hpp"

namespace divsand {

namespace {

constexpr std::size_t kParallelSites = 4096;

double max_abs_deviation_from_one(const std::vector<double>& s) {
    double r = 0.0;
    for (double v : s) r = std::max(r, std::abs(v - 1.0));
    return r;
}

void require_tol(double tol) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
}

}  // namespace

OdometerResult stabilize_toppling(const SandpileConfig& config, double tol, long max_rounds,
                                  const ToppleObserver& observer) {
    require_tol(tol);
    const TorusGrid& grid = config.grid;
    const std::size_t total = grid.total();
    const std::size_t deg = 2 * static_cast<std::size_t>(grid.dim());
    const double share = 1.0 / static_cast<double>(deg);
    const auto nbr = neighbor_table(grid);

    std::vector<double> s(config.s.values());
    std::vector<double> next(total);
    std::vector<double> excess(total);
    std::vector<double> u(total, 0.0);
    const bool par = total >= kParallelSites;

    long rounds = 0;
    while (true) {
        double worst = 0.0;
#pragma omp parallel for reduction(max : worst) if (par)
        for (std::size_t i = 0; i < total; ++i) {
            const double e = s[i] > 1.0 ? s[i] - 1.0 : 0.0;
            excess[i] = e;
            worst = std::max(worst, e);
        }
        if (worst <= tol) break;
        if (rounds >= max_rounds) {
            throw StabilizationError("toppling did not stabilize within " +
                                         std::to_string(max_rounds) + " rounds (max excess " +
                                         std::to_string(worst) + ")",
                                     rounds, worst);
        }
#pragma omp parallel for if (par)
        for (std::size_t i = 0; i < total; ++i) {
            double in = 0.0;
            for (std::size_t k = 0; k < deg; ++k) in += excess[nbr[i * deg + k]];
            next[i] = s[i] - excess[i] + in * share;
            u[i] += excess[i];
        }
        s.swap(next);
        ++rounds;
        if (observer) observer(rounds, s, u);
    }
    const double residual = max_abs_deviation_from_one(s);
    return OdometerResult{ScalarField(grid, std::move(u)), rounds, residual,
                          OdometerMethod::Toppling};
}

OdometerResult stabilize_sequential(const SandpileConfig& config, double tol, long max_sweeps,
                                    std::uint64_t shuffle_seed) {
    require_tol(tol);
    const TorusGrid& grid = config.grid;
    const std::size_t total = grid.total();
    const std::size_t deg = 2 * static_cast<std::size_t>(grid.dim());
    const double share = 1.0 / static_cast<double>(deg);
    const auto nbr = neighbor_table(grid);

    std::vector<double> s(config.s.values());
    std::vector<double> u(total, 0.0);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 gen(shuffle_seed);

    long sweeps = 0;
    while (true) {
        double worst = 0.0;
        for (double v : s) worst = std::max(worst, v - 1.0);
        if (worst <= tol) break;
        if (sweeps >= max_sweeps) {
            throw StabilizationError("sequential toppling did not stabilize", sweeps, worst);
        }
        std::shuffle(order.begin(), order.end(), gen);
        for (std::size_t i : order) {
            const double e = s[i] - 1.0;
            if (e <= 0.0) continue;
            s[i] = 1.0;
            u[i] += e;
            for (std::size_t k = 0; k < deg; ++k) s[nbr[i * deg + k]] += e * share;
        }
        ++sweeps;
    }
    const double residual = max_abs_deviation_from_one(s);
    return OdometerResult{ScalarField(grid, std::move(u)), sweeps, residual,
                          OdometerMethod::Toppling};
}

OdometerResult odometer_spectral(const SandpileConfig& config) {
    const TorusGrid& grid = config.grid;
    const std::size_t total = grid.total();
    std::vector<double> rhs(total);
    for (std::size_t i = 0; i < total; ++i) rhs[i] = 1.0 - config.s[i];
    const ScalarField source(grid, std::move(rhs));
    if (std::abs(source.mean()) > 1e-9) {
        throw ValidationError("1 - s must have zero mean for the Poisson solve (got " +
                              std::to_string(source.mean()) + ")");
    }
    const Spectrum spec = dft_forward(source);
    const auto lambda = laplacian_eigenvalues(grid);
    const std::size_t zero_idx = grid.index_of(Coord{});
    std::vector<Complex> vhat(total);
    for (std::size_t i = 0; i < total; ++i) {
        // Average with the reflected coefficient so the spectrum is exactly Hermitian.
        const Complex c = 0.5 * (spec[i] + std::conj(spec[grid.negated_index(i)]));
        vhat[i] = i == zero_idx ? Complex{} : c / lambda[i];
    }
    const ScalarField v = dft_inverse(Spectrum(grid, std::move(vhat)));
    const double vmin = v.min();
    std::vector<double> u(total);
    for (std::size_t i = 0; i < total; ++i) u[i] = v[i] - vmin;
    ScalarField odo(grid, std::move(u));

    const ScalarField lap = apply_graph_laplacian(odo);
    double residual = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        residual = std::max(residual, std::abs(config.s[i] + lap[i] - 1.0));
    }
    return OdometerResult{std::move(odo), 0, residual, OdometerMethod::Spectral};
}

ScalarField green_function_zero_mean(const TorusGrid& grid, const Coord& x) {
    if (!grid.contains(x)) throw ValidationError("site " + format_coord(x, grid.dim()) + " is off the torus");
    const std::size_t total = grid.total();
    const auto lambda = laplacian_eigenvalues(grid);
    const std::size_t zero_idx = grid.index_of(Coord{});
    const double pref = -2.0 * grid.dim() / static_cast<double>(total);
    std::vector<Complex> ghat(total);
    for (std::size_t i = 0; i < total; ++i) {
        if (i != zero_idx) ghat[i] = pref / lambda[i];
    }
    const ScalarField g0 = dft_inverse(Spectrum(grid, std::move(ghat)));
    // The phase factor e^{-2 pi i xi.x/n} is a translation by x.
    std::vector<double> out(total);
    for_each_site(grid, [&](std::size_t idx, const Coord& y) {
        Coord d{};
        for (int k = 0; k < grid.dim(); ++k) d[k] = y[k] - x[k];
        out[idx] = g0[grid.index_of_wrapped(d)];
    });
    return ScalarField(grid, std::move(out));
}

double chi_covariance(const KernelSpec& kernel, const TorusGrid& grid, const Coord& x,
                      const Coord& y) {
    if (!grid.contains(x) || !grid.contains(y)) throw ValidationError("site is off the torus");
    const int n = grid.side();
    const auto mult = multiplier_table(kernel, grid);
    const auto lambda = laplacian_eigenvalues(grid);
    std::vector<double> cosines(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) cosines[static_cast<std::size_t>(k)] = std::cos(2.0 * std::numbers::pi * k / n);
    double acc = 0.0;
    for_each_site(grid, [&](std::size_t idx, const Coord& xi) {
        if (norm_sq(xi) == 0) return;
        long long dot = 0;
        for (int k = 0; k < grid.dim(); ++k) dot += static_cast<long long>(x[k] - y[k]) * xi[k];
        const auto p = static_cast<std::size_t>(((dot % n) + n) % n);
        acc += mult[idx] * cosines[p] / (lambda[idx] * lambda[idx]);
    });
    return acc;
}

ScalarField chi_covariance_table(const KernelSpec& kernel, const TorusGrid& grid) {
    const auto mult = multiplier_table(kernel, grid);
    const auto lambda = laplacian_eigenvalues(grid);
    const std::size_t zero_idx = grid.index_of(Coord{});
    std::vector<Complex> c(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        if (i != zero_idx) c[i] = mult[i] / (lambda[i] * lambda[i]);
    }
    return dft_inverse(Spectrum(grid, std::move(c)));
}

double eta_covariance_bruteforce(const KernelSpec& kernel, const TorusGrid& grid, const Coord& x,
                                 const Coord& y) {
    const std::size_t total = grid.total();
    if (total > 4096) throw ValidationError("eta covariance brute force requires n^d <= 4096");
    const auto mult = multiplier_table(kernel, grid);
    std::vector<Complex> c(mult.begin(), mult.end());
    const auto kz = dft_inverse_complex(Spectrum(grid, std::move(c)));
    std::vector<double> kn(total);
    for (std::size_t i = 0; i < total; ++i) {
        kn[i] = 0.5 * (kz[i].real() + kz[grid.negated_index(i)].real());
    }
    const ScalarField gx = green_function_zero_mean(grid, x);
    const ScalarField gy = green_function_zero_mean(grid, y);
    std::vector<Coord> coords(total);
    for_each_site(grid, [&](std::size_t idx, const Coord& z) { coords[idx] = z; });

    double acc = 0.0;
    for (std::size_t a = 0; a < total; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < total; ++b) {
            Coord d{};
            for (int k = 0; k < grid.dim(); ++k) d[k] = coords[a][k] - coords[b][k];
            row += kn[grid.index_of_wrapped(d)] * gy[b];
        }
        acc += gx[a] * row;
    }
    const double deg = 2.0 * grid.dim();
    return acc / (deg * deg);
}

}  // namespace divsand
