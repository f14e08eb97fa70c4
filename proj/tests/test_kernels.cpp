#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "divsand/errors.hpp"
#include "divsand/kernels.hpp"
#include "oracles.hpp"

using namespace divsand;

namespace {

// Minimum-image power-law kernel evaluated straight from the definition.
double power_law_direct(int sign, double diag, double expo, const Coord& z, int d) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += static_cast<double>(z[k]) * z[k];
    return r2 == 0.0 ? diag : sign * std::pow(std::sqrt(r2), -expo);
}

std::vector<KernelSpec> valid_kernels(int d) {
    std::vector<KernelSpec> out{WhiteNoise{}, PowerLaw{1, 7.0, 3.0}, FractionalSpectral{0.5},
                                FractionalSpectral{2.0}, DirectMultiplier{0.5}};
    if (d == 1) out.push_back(PowerLaw{-1, 7.0, 3.0});
    return out;
}

}  // namespace

TEST_CASE("white noise multiplier") {
    const TorusGrid g(1, 8);
    for_each_site(g, [&](std::size_t, const Coord& xi) {
        CHECK(multiplier(WhiteNoise{}, g, xi) == 0.125);
    });
}

TEST_CASE("fractional spectral multiplier") {
    // Base (2d n^2 / 4 pi^2)(-lambda) equal to 1 gives multiplier 1 for every s.
    for (int d : {1, 2, 3}) {
        for (int n : {8, 30}) {
            const double neg_lambda = 4.0 * oracle::pi * oracle::pi / (2.0 * d * n * n);
            for (double s : {0.25, 0.5, 1.0, 3.0}) {
                CHECK(fractional_spectral_multiplier(neg_lambda, d, n, s) == doctest::Approx(1.0).epsilon(1e-14));
            }
        }
    }
    const TorusGrid g(2, 16);
    CHECK(multiplier(FractionalSpectral{0.5, 3.0}, g, Coord{}) == 3.0);
    // (pi^2 / (n^2 sum sin^2))^{2s} for xi = (1, 1), s = 1.
    const double s2 = 2.0 * std::pow(std::sin(oracle::pi / 16), 2);
    const double expect = std::pow(oracle::pi * oracle::pi / (256.0 * s2), 2.0);
    CHECK(multiplier(FractionalSpectral{1.0}, g, Coord{1, 1}) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("direct multiplier") {
    const TorusGrid g(2, 8);
    CHECK(multiplier(DirectMultiplier{0.5}, g, Coord{1, 0}) == 1.0);
    CHECK(multiplier(DirectMultiplier{0.5}, g, Coord{2, 1}) == doctest::Approx(0.2));
    CHECK(multiplier(DirectMultiplier{1.0, 2.0}, g, Coord{}) == 2.0);
    CHECK_THROWS_AS(multiplier(DirectMultiplier{0.5}, g, Coord{4, 0}), ValidationError);
}

TEST_CASE("power law multiplier is the transform of its kernel") {
    for (int d : {1, 2}) {
        const TorusGrid g(d, 8);
        for (int sign : {1, -1}) {
            const PowerLaw k{sign, 7.0, 3.0};
            std::vector<double> kz(g.total());
            for_each_site(g, [&](std::size_t i, const Coord& z) { kz[i] = power_law_direct(sign, 7.0, 3.0, z, d); });
            const auto ref = oracle::dft(g, kz);
            const auto table = multiplier_table(k, g);
            for (std::size_t i = 0; i < g.total(); ++i) {
                CHECK(table[i] == doctest::Approx(ref[i].real()).epsilon(1e-12));
                CHECK(std::abs(ref[i].imag()) < 1e-14);
            }
        }
    }
}

TEST_CASE("kernel tables") {
    const ScalarField w = kernel_table(WhiteNoise{}, TorusGrid(1, 4));
    CHECK(w.at(Coord{0}) == doctest::Approx(1.0));
    CHECK(std::abs(w.at(Coord{-2})) < 1e-15);
    CHECK(std::abs(w.at(Coord{1})) < 1e-15);

    const TorusGrid g(2, 8);
    const ScalarField p = kernel_table(PowerLaw{1, 7.0, 3.0}, g);
    CHECK(p.at(Coord{0, 0}) == doctest::Approx(7.0).epsilon(1e-13));
    CHECK(p.at(Coord{1, 0}) == doctest::Approx(1.0).epsilon(1e-13));
    for_each_site(g, [&](std::size_t i, const Coord& z) {
        CHECK(p[i] == doctest::Approx(power_law_direct(1, 7.0, 3.0, z, 2)).epsilon(1e-12));
    });

    const double c = 0.3;
    const ScalarField t = kernel_table(Table::constant(g, c), g);
    CHECK(t.at(Coord{}) == doctest::Approx(c * 64.0).epsilon(1e-14));
    for_each_site(g, [&](std::size_t i, const Coord& z) {
        if (norm_sq(z) != 0) CHECK(std::abs(t[i]) < 1e-13);
    });
}

TEST_CASE("kernel_table is exactly even for every variant") {
    for (int d : {1, 2}) {
        for (int n : {7, 8}) {
            const TorusGrid g(d, n);
            for (const auto& k : valid_kernels(d)) {
                const ScalarField t = kernel_table(k, g);
                for (std::size_t i = 0; i < g.total(); ++i) REQUIRE(t[i] == t[g.negated_index(i)]);
            }
        }
    }
}

TEST_CASE("validate reports") {
    const PSDReport w = validate(WhiteNoise{}, TorusGrid(1, 8), true);
    CHECK(w.is_valid);
    REQUIRE(w.min_eigenvalue_bruteforce.has_value());
    CHECK(*w.min_eigenvalue_bruteforce == doctest::Approx(1.0).epsilon(1e-12));

    const TorusGrid g(2, 8);
    Table t = Table::constant(g, 0.01);
    t.values[Coord{2, -1}] = -0.5;
    t.values[Coord{-2, 1}] = -0.5;
    const PSDReport bad = validate(t, g, false);
    CHECK_FALSE(bad.is_valid);
    REQUIRE(bad.offending_frequency.has_value());
    CHECK(norm_sq(*bad.offending_frequency) == 5);
    CHECK(bad.min_multiplier == -0.5);

    Table asym = Table::constant(g, 0.01);
    asym.values[Coord{1, 0}] = 0.02;
    const PSDReport a = validate(asym, g, false);
    CHECK_FALSE(a.is_valid);
    REQUIRE(a.offending_frequency.has_value());
    CHECK(std::abs((*a.offending_frequency)[0]) == 1);

    CHECK_THROWS_AS(validate(WhiteNoise{}, TorusGrid(2, 65), true), ValidationError);
}

TEST_CASE("negative power law is not positive definite in two dimensions") {
    // n^d K^(0) = 7 - sum_{z != 0} |z|^{-3} over the torus window.
    for (int n : {8, 16}) {
        const TorusGrid g(2, n);
        double tail = 0.0;
        for_each_site(g, [&](std::size_t, const Coord& z) {
            if (norm_sq(z) != 0) tail += std::pow(static_cast<double>(norm_sq(z)), -1.5);
        });
        const PSDReport r = validate(PowerLaw{-1, 7.0, 3.0}, g, n == 8);
        CHECK_FALSE(r.is_valid);
        CHECK(r.valid_on_zero_mean);
        CHECK(r.nonpositive_modes == 1);
        REQUIRE(r.offending_frequency.has_value());
        CHECK(norm_sq(*r.offending_frequency) == 0);
        CHECK(r.min_multiplier * n * n == doctest::Approx(7.0 - tail).epsilon(1e-12));
        if (n == 8) {
            CHECK(r.min_multiplier * 64 == doctest::Approx(-0.6008).epsilon(1e-3));
            CHECK(*r.min_eigenvalue_bruteforce < -1e-6);
        }
        try {
            multiplier(PowerLaw{-1, 7.0, 3.0}, g, Coord{});
            FAIL("expected KernelInvalidError");
        } catch (const KernelInvalidError& e) {
            CHECK(norm_sq(e.frequency()) == 0);
        }
    }
    CHECK(validate(PowerLaw{-1, 7.0, 3.0}, TorusGrid(1, 16), false).is_valid);
}

TEST_CASE("discrete Bochner in both directions") {
    for (int d : {1, 2}) {
        const TorusGrid g(d, 8);
        for (const auto& k : valid_kernels(d)) {
            const PSDReport r = validate(k, g, true);
            CHECK(r.is_valid);
            CHECK(*r.min_eigenvalue_bruteforce >= -1e-10);
            // Smallest eigenvalue of a circulant is n^d times its smallest multiplier.
            CHECK(*r.min_eigenvalue_bruteforce ==
                  doctest::Approx(r.min_multiplier * static_cast<double>(g.total())).epsilon(1e-9));

            auto mult = multiplier_table(k, g);
            mult[g.index_of(Coord{1})] = -0.5;
            mult[g.index_of(Coord{-1})] = -0.5;
            CHECK(bruteforce_min_eigenvalue(g, mult) < -1e-6);
        }
    }
}

TEST_CASE("limit multipliers") {
    CHECK(limit_multiplier(FractionalSpectral{1.0}, Coord{2, 0}) == doctest::Approx(0.0625));
    CHECK(limit_multiplier(DirectMultiplier{0.7}, Coord{0, 1}) == 1.0);
    CHECK(limit_multiplier(DirectMultiplier{0.5}, Coord{2, 1}) == doctest::Approx(0.2));
    CHECK_THROWS_AS(limit_multiplier(WhiteNoise{}, Coord{1}), ZeroLimitError);
    CHECK_THROWS_AS(limit_multiplier(PowerLaw{}, Coord{1}), ZeroLimitError);
    CHECK_THROWS_AS(limit_multiplier(DirectMultiplier{}, Coord{}), ValidationError);
    Table t;
    t.values[Coord{1}] = 0.25;
    CHECK(limit_multiplier(t, Coord{1}) == 0.25);
}

TEST_CASE("rescaled power law limit approaches the summed kernel") {
    double zeta3 = 0.0;
    for (int k = 1; k < 2000000; ++k) zeta3 += 1.0 / (static_cast<double>(k) * k * k);
    const LimitEstimate e = rescaled_limit_multiplier(PowerLaw{1, 7.0, 3.0}, 1, Coord{1});
    CHECK(e.estimate);
    CHECK(e.order > 0.5);
    CHECK(e.value == doctest::Approx(7.0 + 2.0 * zeta3).epsilon(1e-3));
    const LimitEstimate w = rescaled_limit_multiplier(WhiteNoise{}, 2, Coord{1, 0});
    CHECK(w.value == 1.0);
    CHECK_FALSE(w.estimate);
    CHECK_THROWS_AS(rescaled_limit_multiplier(DirectMultiplier{}, 2, Coord{1, 0}), ValidationError);
}

TEST_CASE("summed kernel constant") {
    CHECK(summed_kernel_constant(WhiteNoise{}, TorusGrid(2, 8)) == 1.0);
    const TorusGrid g(1, 64);
    CHECK(summed_kernel_constant(Table::constant(g, 7.0 / 64.0), g) == doctest::Approx(7.0));
    double ref = 7.0;
    for (int k = 1; k <= 32; ++k) ref += 2.0 / (static_cast<double>(k) * k * k);
    CHECK(summed_kernel_constant(PowerLaw{1, 7.0, 3.0}, g) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(ref == doctest::Approx(9.403167284715224).epsilon(1e-14));
    try {
        summed_kernel_constant(Table::constant(g, 0.0), g);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("C_K = 0 violates hypothesis") != std::string::npos);
    }
    CHECK_THROWS_AS(summed_kernel_constant(FractionalSpectral{}, g), ValidationError);
}

TEST_CASE("fractional kernel converges monotonically within the sandwich bound") {
    const double c = 0.6;
    for (double s : {0.5, 1.0, 2.0}) {
        for (const Coord& xi : {Coord{1, 0}, Coord{1, 1}, Coord{2, 1}}) {
            const double r2 = static_cast<double>(norm_sq(xi));
            const double target = std::pow(r2, -2.0 * s);
            double prev = std::numeric_limits<double>::infinity();
            for (int n : {8, 16, 32, 64}) {
                const double gap = multiplier(FractionalSpectral{s}, TorusGrid(2, n), xi) - target;
                CHECK(gap >= 0.0);
                CHECK(gap < prev);
                const double bound = std::pow(1.0 / r2 + c * oracle::pi * oracle::pi / (n * n), 2.0 * s) - target;
                CHECK(gap <= bound);
                prev = gap;
            }
        }
    }
}

TEST_CASE("multipliers are uniformly bounded over the configured sizes") {
    for (const auto& k : valid_kernels(2)) {
        const double sup = multiplier_sup(k, 2, {8, 16, 32});
        CHECK(std::isfinite(sup));
        CHECK(sup > 0.0);
    }
    CHECK(multiplier_sup(DirectMultiplier{0.5}, 2, {8, 16}) == 1.0);
}

TEST_CASE("discrete fractional laplacian") {
    const TorusGrid g(1, 2);
    const ScalarField f(g, {1.0, -1.0});
    const ScalarField h = fractional_laplacian_discrete(f, 1.0, FracDirection::Inverse);
    CHECK(h[0] == doctest::Approx(0.5));
    CHECK(h[1] == doctest::Approx(-0.5));

    const TorusGrid g2(2, 8);
    std::vector<double> mode(g2.total());
    const Coord w{1, 2};
    for_each_site(g2, [&](std::size_t i, const Coord& z) {
        mode[i] = std::cos(2.0 * oracle::pi * oracle::dot(z, w, 2) / 8.0);
    });
    const double lam = laplacian_eigenvalue(g2, w);
    const ScalarField m = fractional_laplacian_discrete(ScalarField(g2, mode), 0.7, FracDirection::Inverse);
    for (std::size_t i = 0; i < g2.total(); ++i) CHECK(std::abs(m[i] - std::pow(-lam, -0.7) * mode[i]) < 1e-12);
    const ScalarField fwd = fractional_laplacian_discrete(ScalarField(g2, mode), 0.7, FracDirection::Forward);
    for (std::size_t i = 0; i < g2.total(); ++i) CHECK(std::abs(fwd[i] - std::pow(-lam, 0.7) * mode[i]) < 1e-12);

    std::vector<double> r(g2.total());
    double mean = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) mean += (r[i] = std::sin(3.0 * i + 1.0));
    mean /= static_cast<double>(r.size());
    for (double& v : r) v -= mean;
    const ScalarField z(g2, r);
    const ScalarField there = fractional_laplacian_discrete(z, 1.0, FracDirection::Inverse);
    const ScalarField back = fractional_laplacian_discrete(there, -1.0, FracDirection::Inverse);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(back[i] - r[i]) < 1e-12);

    try {
        fractional_laplacian_discrete(ScalarField(g, {1.0, 0.0}), 0.5, FracDirection::Inverse);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("zero-average") != std::string::npos);
    }
}

TEST_CASE("table CSV loader") {
    const auto path = std::filesystem::temp_directory_path() / "divsand_table_test.csv";
    {
        std::ofstream out(path);
        out << "xi1,xi2,value\n0,0,1.5\n1,0,0.25\n-1,0,0.25\n";
    }
    const Table t = load_table_csv(path, 2);
    CHECK(t.values.size() == 3);
    CHECK(t.values.at(Coord{1, 0}) == 0.25);
    {
        std::ofstream out(path);
        out << "0,0,1.5\n1,0\n";
    }
    CHECK_THROWS_AS(load_table_csv(path, 2), ValidationError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(multiplier_table(Table{}, TorusGrid(1, 4)), ValidationError);
}
