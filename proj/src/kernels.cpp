#include "divsand/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "divsand/errors.hpp"

namespace divsand {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::size_t kBruteForceCap = 4096;

double euclid(const Coord& v) { return std::sqrt(static_cast<double>(norm_sq(v))); }

void require_frequency(const TorusGrid& grid, const Coord& xi) {
    if (!grid.contains(xi)) {
        throw ValidationError("frequency " + format_coord(xi, kMaxDim) + " is outside Z_n^d (n=" +
                              std::to_string(grid.side()) + ")");
    }
}

double table_lookup(const Table& t, const Coord& xi, int dim) {
    auto it = t.values.find(xi);
    if (it == t.values.end()) {
        throw ValidationError("multiplier table has no entry for frequency " +
                              format_coord(xi, dim));
    }
    return it->second;
}

// e^{2 pi i k / n} for k = 0..n-1; phases are reduced exactly in integers.
std::vector<Complex> unit_roots(int n) {
    std::vector<Complex> roots(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        roots[static_cast<std::size_t>(k)] = {std::cos(a), std::sin(a)};
    }
    return roots;
}

int phase_index(const Coord& a, const Coord& b, int dim, int n) {
    long long dot = 0;
    for (int k = 0; k < dim; ++k) dot += static_cast<long long>(a[k]) * b[k];
    return static_cast<int>(((dot % n) + n) % n);
}

double power_law_multiplier_direct(const PowerLaw& k, const TorusGrid& grid, const Coord& xi) {
    const auto roots = unit_roots(grid.side());
    double acc = 0.0;
    for_each_site(grid, [&](std::size_t, const Coord& z) {
        const int p = phase_index(z, xi, grid.dim(), grid.side());
        acc += power_law_value(k, z, grid.dim()) * roots[static_cast<std::size_t>(p)].real();
    });
    return acc / static_cast<double>(grid.total());
}

double raw_multiplier(const KernelSpec& kernel, const TorusGrid& grid, const Coord& xi) {
    return std::visit(
        Overloaded{
            [&](const WhiteNoise&) { return 1.0 / static_cast<double>(grid.total()); },
            [&](const PowerLaw& k) { return power_law_multiplier_direct(k, grid, xi); },
            [&](const FractionalSpectral& k) {
                if (norm_sq(xi) == 0) return k.zero_mode;
                return fractional_spectral_multiplier(-laplacian_eigenvalue(grid, xi), grid.dim(),
                                                      grid.side(), k.s);
            },
            [&](const DirectMultiplier& k) {
                if (norm_sq(xi) == 0) return k.zero_mode;
                return std::pow(euclid(xi), -4.0 * k.s);
            },
            [&](const Table& t) { return table_lookup(t, xi, grid.dim()); },
        },
        kernel);
}

}  // namespace

Table Table::constant(const TorusGrid& grid, double c) {
    Table t;
    for_each_site(grid, [&](std::size_t, const Coord& w) { t.values.emplace(w, c); });
    return t;
}

std::string kernel_name(const KernelSpec& kernel) {
    return std::visit(Overloaded{
                          [](const WhiteNoise&) { return std::string("white_noise"); },
                          [](const PowerLaw& k) {
                              return std::string(k.sign > 0 ? "power_law+" : "power_law-");
                          },
                          [](const FractionalSpectral&) { return std::string("fractional_spectral"); },
                          [](const DirectMultiplier&) { return std::string("direct_multiplier"); },
                          [](const Table&) { return std::string("table"); },
                      },
                      kernel);
}

Table load_table_csv(const std::filesystem::path& path, int dim) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open multiplier table " + path.string());
    Table table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (static_cast<int>(cells.size()) != dim + 1) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(dim + 1) + " columns");
        }
        try {
            Coord xi{};
            for (int k = 0; k < dim; ++k) xi[k] = std::stoi(cells[static_cast<std::size_t>(k)]);
            table.values[xi] = std::stod(cells.back());
        } catch (const std::logic_error&) {
            if (lineno == 1) continue;  // header
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed row");
        }
    }
    return table;
}

double power_law_value(const PowerLaw& kernel, const Coord& z, int dim) {
    long long r2 = 0;
    for (int k = 0; k < dim; ++k) r2 += static_cast<long long>(z[k]) * z[k];
    if (r2 == 0) return kernel.diagonal;
    return kernel.sign * std::pow(static_cast<double>(r2), -0.5 * kernel.exponent);
}

double fractional_spectral_multiplier(double neg_lambda, int dim, int side, double s) {
    const double n2 = static_cast<double>(side) * side;
    const double base = 2.0 * dim * n2 / (4.0 * std::numbers::pi * std::numbers::pi) * neg_lambda;
    return std::pow(base, -2.0 * s);
}

double multiplier(const KernelSpec& kernel, const TorusGrid& grid, const Coord& xi) {
    require_frequency(grid, xi);
    const double v = raw_multiplier(kernel, grid, xi);
    if (!(v > 0.0)) {
        throw KernelInvalidError(kernel_name(kernel) + " multiplier is non-positive (" +
                                     std::to_string(v) + ") at frequency " +
                                     format_coord(xi, grid.dim()),
                                 xi, grid.dim());
    }
    return v;
}

std::vector<double> multiplier_table(const KernelSpec& kernel, const TorusGrid& grid) {
    std::vector<double> out(grid.total());
    if (const auto* pl = std::get_if<PowerLaw>(&kernel)) {
        std::vector<double> k(grid.total());
        for_each_site(grid, [&](std::size_t idx, const Coord& z) {
            k[idx] = power_law_value(*pl, z, grid.dim());
        });
        const Spectrum spec = dft_forward(ScalarField(grid, std::move(k)));
        // The kernel is even, so the transform is real and symmetric; averaging
        // with the reflected entry makes the symmetry exact.
        for (std::size_t i = 0; i < grid.total(); ++i) {
            out[i] = 0.5 * (spec[i].real() + spec[grid.negated_index(i)].real());
        }
        return out;
    }
    for_each_site(grid, [&](std::size_t idx, const Coord& xi) {
        out[idx] = raw_multiplier(kernel, grid, xi);
    });
    return out;
}

ScalarField kernel_table(const KernelSpec& kernel, const TorusGrid& grid) {
    const auto mult = multiplier_table(kernel, grid);
    std::vector<Complex> coeffs(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        if (!(mult[i] > 0.0)) {
            const Coord xi = grid.coords_of(i);
            throw KernelInvalidError(kernel_name(kernel) + " multiplier is non-positive at " +
                                         format_coord(xi, grid.dim()),
                                     xi, grid.dim());
        }
        coeffs[i] = mult[i];
    }
    const auto values = dft_inverse_complex(Spectrum(grid, std::move(coeffs)));
    std::vector<double> even(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        even[i] = 0.5 * (values[i].real() + values[grid.negated_index(i)].real());
    }
    return ScalarField(grid, std::move(even));
}

double bruteforce_min_eigenvalue(const TorusGrid& grid, const std::vector<double>& multipliers) {
    const std::size_t total = grid.total();
    if (total > kBruteForceCap) {
        throw ValidationError("brute-force covariance check limited to n^d <= 4096, got " +
                              std::to_string(total));
    }
    const int n = grid.side();
    const auto roots = unit_roots(n);
    std::vector<Coord> coords(total);
    for_each_site(grid, [&](std::size_t idx, const Coord& z) { coords[idx] = z; });

    // K_n(z) = sum_xi K^(xi) exp(2 pi i z.xi / n) by direct summation.
    std::vector<Complex> kz(total);
    double imag_max = 0.0;
    double real_max = 0.0;
    for (std::size_t zi = 0; zi < total; ++zi) {
        Complex acc = 0.0;
        for (std::size_t wi = 0; wi < total; ++wi) {
            acc += multipliers[wi] *
                   roots[static_cast<std::size_t>(phase_index(coords[zi], coords[wi], grid.dim(), n))];
        }
        kz[zi] = acc;
        imag_max = std::max(imag_max, std::abs(acc.imag()));
        real_max = std::max(real_max, std::abs(acc.real()));
    }

    auto lag_index = [&](std::size_t x, std::size_t y) {
        Coord diff{};
        for (int k = 0; k < grid.dim(); ++k) diff[k] = coords[x][k] - coords[y][k];
        return grid.index_of_wrapped(diff);
    };

    const auto m = static_cast<Eigen::Index>(total);
    if (imag_max <= 1e-12 * std::max(1.0, real_max)) {
        Eigen::MatrixXd cov(m, m);
        for (std::size_t x = 0; x < total; ++x)
            for (std::size_t y = 0; y < total; ++y)
                cov(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = kz[lag_index(x, y)].real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }
    Eigen::MatrixXcd cov(m, m);
    for (std::size_t x = 0; x < total; ++x)
        for (std::size_t y = 0; y < total; ++y)
            cov(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = kz[lag_index(x, y)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

PSDReport validate(const KernelSpec& kernel, const TorusGrid& grid, bool brute_force) {
    if (brute_force && grid.total() > kBruteForceCap) {
        throw ValidationError("brute-force validation requires n^d <= 4096");
    }
    const auto mult = multiplier_table(kernel, grid);
    PSDReport report;

    double scale = 0.0;
    for (double v : mult) scale = std::max(scale, std::abs(v));
    std::size_t argmin = 0;
    std::optional<std::size_t> asym_at;
    bool zero_mean_ok = true;
    const std::size_t zero_idx = grid.index_of(Coord{});
    for (std::size_t i = 0; i < mult.size(); ++i) {
        if (mult[i] < mult[argmin]) argmin = i;
        if (!(mult[i] > 0.0)) {
            ++report.nonpositive_modes;
            if (i != zero_idx) zero_mean_ok = false;
        }
        const double asym = std::abs(mult[i] - mult[grid.negated_index(i)]);
        if (asym > report.max_asymmetry) {
            report.max_asymmetry = asym;
            asym_at = i;
        }
    }
    const bool symmetric = report.max_asymmetry <= 1e-12 * std::max(scale, 1e-300);
    report.min_multiplier = mult[argmin];
    report.is_valid = report.min_multiplier > 0.0 && symmetric;
    report.valid_on_zero_mean = zero_mean_ok && symmetric;
    if (!(report.min_multiplier > 0.0)) {
        report.offending_frequency = grid.coords_of(argmin);
    } else if (!symmetric) {
        report.offending_frequency = grid.coords_of(*asym_at);
    }
    if (brute_force) report.min_eigenvalue_bruteforce = bruteforce_min_eigenvalue(grid, mult);
    return report;
}

double limit_multiplier(const KernelSpec& kernel, const Coord& xi) {
    if (norm_sq(xi) == 0) throw ValidationError("limit multiplier is defined for xi != 0 only");
    const std::string zero_limit =
        " multiplier tends to 0; requires b_n rescaling (use the bi-Laplacian scaling path)";
    return std::visit(Overloaded{
                          [&](const WhiteNoise&) -> double {
                              throw ZeroLimitError("white_noise" + zero_limit);
                          },
                          [&](const PowerLaw& k) -> double {
                              throw ZeroLimitError(kernel_name(k) + zero_limit);
                          },
                          [&](const FractionalSpectral& k) { return std::pow(euclid(xi), -4.0 * k.s); },
                          [&](const DirectMultiplier& k) { return std::pow(euclid(xi), -4.0 * k.s); },
                          [&](const Table& t) { return table_lookup(t, xi, kMaxDim); },
                      },
                      kernel);
}

LimitEstimate rescaled_limit_multiplier(const KernelSpec& kernel, int dim, const Coord& xi) {
    if (std::holds_alternative<WhiteNoise>(kernel)) return {1.0, 0.0, false};
    const auto* pl = std::get_if<PowerLaw>(&kernel);
    if (!pl) {
        throw ValidationError(kernel_name(kernel) +
                              " has no finite rescaled limit n^d K^_n (kernel not summable)");
    }
    const int top = std::min(128, max_side(dim));
    const int sides[3] = {top / 4, top / 2, top};
    double a[3];
    for (int i = 0; i < 3; ++i) {
        TorusGrid g(dim, sides[i]);
        require_frequency(g, xi);
        a[i] = static_cast<double>(g.total()) * power_law_multiplier_direct(*pl, g, xi);
    }
    const double d1 = a[1] - a[0];
    const double d2 = a[2] - a[1];
    if (std::abs(d2) < 1e-14 * std::max(1.0, std::abs(a[2])) || d1 * d2 <= 0.0) {
        return {a[2], 0.0, true};
    }
    const double order = std::log2(d1 / d2);
    if (!(order > 0.0)) return {a[2], 0.0, true};
    const double extrapolated = a[2] + d2 / (std::pow(2.0, order) - 1.0);
    return {extrapolated, order, true};
}

double summed_kernel_constant(const KernelSpec& kernel, const TorusGrid& grid) {
    const double ck = std::visit(
        Overloaded{
            [&](const WhiteNoise&) { return 1.0; },
            [&](const PowerLaw& k) {
                const int half = grid.side() / 2;
                // Window |z_i| <= floor(n/2) of the lattice kernel.
                TorusGrid window(grid.dim(), 2 * half + 1);
                double acc = 0.0;
                for_each_site(window, [&](std::size_t, const Coord& z) {
                    acc += power_law_value(k, z, grid.dim());
                });
                return acc;
            },
            [&](const Table& t) {
                return static_cast<double>(grid.total()) * table_lookup(t, Coord{}, grid.dim());
            },
            [&](const auto& k) -> double {
                throw ValidationError(kernel_name(k) +
                                      " has no absolutely summable kernel table; C_K undefined");
            },
        },
        kernel);
    if (std::abs(ck) <= 1e-12) throw ValidationError("C_K = 0 violates hypothesis");
    return ck;
}

double multiplier_sup(const KernelSpec& kernel, int dim, const std::vector<int>& sides) {
    double sup = 0.0;
    for (int n : sides) {
        const auto mult = multiplier_table(kernel, TorusGrid(dim, n));
        sup = std::max(sup, *std::max_element(mult.begin(), mult.end()));
    }
    return sup;
}

Spectrum fractional_laplacian_discrete(const Spectrum& spec, double s, FracDirection dir) {
    const TorusGrid& grid = spec.grid();
    double scale = 1.0;
    for (const Complex& c : spec.coeffs()) scale = std::max(scale, std::abs(c));
    const std::size_t zero_idx = grid.index_of(Coord{});
    if (std::abs(spec[zero_idx]) > 1e-10 * scale) {
        throw ValidationError(
            "fractional Laplacian needs zero-average input (sum_z f(z) = 0)");
    }
    const double power = dir == FracDirection::Inverse ? -s : s;
    const auto lambda = laplacian_eigenvalues(grid);
    std::vector<Complex> out(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        if (i == zero_idx) continue;
        out[i] = spec[i] * std::pow(-lambda[i], power);
    }
    return Spectrum(grid, std::move(out));
}

ScalarField fractional_laplacian_discrete(const ScalarField& field, double s, FracDirection dir) {
    return dft_inverse(fractional_laplacian_discrete(dft_forward(field), s, dir));
}

}  // namespace divsand
