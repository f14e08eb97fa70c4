#include "divsand/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "divsand/errors.hpp"
#include "fft.hpp"

namespace divsand {

std::string format_coord(const Coord& v, int dim) {
    std::ostringstream os;
    os << '(';
    for (int k = 0; k < dim; ++k) {
        if (k) os << ',';
        os << v[k];
    }
    os << ')';
    return os.str();
}

int max_side(int dim) {
    switch (dim) {
        case 1:
        case 2:
            return 1024;
        case 3:
            return 256;
        case 4:
            return 64;
        default:
            return 0;
    }
}

TorusGrid::TorusGrid(int dim, int side) : dim_(dim), side_(side), total_(1) {
    if (dim < 1 || dim > kMaxDim) {
        throw ValidationError("torus dimension must be in [1, " + std::to_string(kMaxDim) +
                              "], got " + std::to_string(dim));
    }
    if (side < 2 || side > max_side(dim)) {
        throw ValidationError("torus side must be in [2, " + std::to_string(max_side(dim)) +
                              "] for d=" + std::to_string(dim) + ", got " +
                              std::to_string(side));
    }
    for (int k = 0; k < dim; ++k) total_ *= static_cast<std::size_t>(side);
}

bool TorusGrid::contains(const Coord& z) const {
    for (int k = 0; k < kMaxDim; ++k) {
        if (k < dim_) {
            if (z[k] < lo() || z[k] > hi()) return false;
        } else if (z[k] != 0) {
            return false;
        }
    }
    return true;
}

Coord TorusGrid::coords_of(std::size_t idx) const {
    if (idx >= total_) {
        throw std::out_of_range("site index " + std::to_string(idx) + " out of range [0, " +
                                std::to_string(total_) + ")");
    }
    Coord z{};
    const auto n = static_cast<std::size_t>(side_);
    for (int k = dim_ - 1; k >= 0; --k) {
        z[k] = static_cast<int>(idx % n) + lo();
        idx /= n;
    }
    return z;
}

std::size_t TorusGrid::index_of(const Coord& z) const {
    if (!contains(z)) {
        throw std::out_of_range("coordinate " + format_coord(z, kMaxDim) +
                                " outside Z_n^d for n=" + std::to_string(side_));
    }
    std::size_t idx = 0;
    for (int k = 0; k < dim_; ++k) {
        idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(z[k] - lo());
    }
    return idx;
}

int TorusGrid::wrap(long long c) const {
    const long long n = side_;
    long long r = ((c - lo()) % n + n) % n;
    return static_cast<int>(r + lo());
}

std::size_t TorusGrid::index_of_wrapped(const Coord& z) const {
    Coord w{};
    for (int k = 0; k < dim_; ++k) w[k] = wrap(z[k]);
    return index_of(w);
}

std::size_t TorusGrid::negated_index(std::size_t idx) const {
    Coord z = coords_of(idx);
    for (int k = 0; k < dim_; ++k) z[k] = wrap(-static_cast<long long>(z[k]));
    return index_of(z);
}

std::size_t TorusGrid::stride(int axis) const {
    std::size_t s = 1;
    for (int k = axis + 1; k < dim_; ++k) s *= static_cast<std::size_t>(side_);
    return s;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const TorusGrid& grid) : grid_(grid), values_(grid.total(), 0.0) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.total()) {
        throw ValidationError("field has " + std::to_string(values_.size()) +
                              " values, grid has " + std::to_string(grid_.total()) + " sites");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw ValidationError("field contains a non-finite value");
    }
}

double ScalarField::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

Spectrum::Spectrum(const TorusGrid& grid) : grid_(grid), coeffs_(grid.total()) {}

Spectrum::Spectrum(const TorusGrid& grid, std::vector<Complex> coeffs)
    : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != grid_.total()) {
        throw ValidationError("spectrum has " + std::to_string(coeffs_.size()) +
                              " coefficients, grid has " + std::to_string(grid_.total()));
    }
}

double Spectrum::hermitian_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        const Complex partner = coeffs_[grid_.negated_index(i)];
        worst = std::max(worst, std::abs(coeffs_[i] - std::conj(partner)));
    }
    return worst;
}

// ---------------------------------------------------------------------------

double laplacian_eigenvalue(const TorusGrid& grid, const Coord& w) {
    double acc = 0.0;
    for (int k = 0; k < grid.dim(); ++k) {
        const double s = std::sin(std::numbers::pi * w[k] / grid.side());
        acc += s * s;
    }
    return -(4.0 / (2.0 * grid.dim())) * acc;
}

std::vector<double> laplacian_eigenvalues(const TorusGrid& grid) {
    // Per-axis table so the d-dimensional loop is additions only.
    std::vector<double> axis(static_cast<std::size_t>(grid.side()));
    for (int c = grid.lo(); c <= grid.hi(); ++c) {
        const double s = std::sin(std::numbers::pi * c / grid.side());
        axis[static_cast<std::size_t>(c - grid.lo())] = s * s;
    }
    const double scale = -(4.0 / (2.0 * grid.dim()));
    std::vector<double> out(grid.total());
    for_each_site(grid, [&](std::size_t idx, const Coord& w) {
        double acc = 0.0;
        for (int k = 0; k < grid.dim(); ++k) acc += axis[static_cast<std::size_t>(w[k] - grid.lo())];
        out[idx] = scale * acc;
    });
    return out;
}

Spectrum dft_forward(const ScalarField& field) {
    const TorusGrid& grid = field.grid();
    const auto& perm = detail::natural_order(grid);
    std::vector<Complex> buf(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) buf[perm[i]] = field[i];
    detail::fft_inplace(buf, grid.dim(), grid.side(), -1);

    const double norm = 1.0 / static_cast<double>(grid.total());
    std::vector<Complex> coeffs(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) coeffs[i] = buf[perm[i]] * norm;
    return Spectrum(grid, std::move(coeffs));
}

std::vector<Complex> dft_inverse_complex(const Spectrum& spec) {
    const TorusGrid& grid = spec.grid();
    const auto& perm = detail::natural_order(grid);
    std::vector<Complex> buf(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) buf[perm[i]] = spec[i];
    detail::fft_inplace(buf, grid.dim(), grid.side(), +1);

    std::vector<Complex> out(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) out[i] = buf[perm[i]];
    return out;
}

ScalarField dft_inverse(const Spectrum& spec) {
    double scale = 0.0;
    for (const Complex& c : spec.coeffs()) scale = std::max(scale, std::abs(c));
    if (spec.hermitian_defect() > 1e-10 * std::max(1.0, scale)) {
        throw ValidationError("spectrum is not Hermitian: field would be complex");
    }
    auto values = dft_inverse_complex(spec);
    std::vector<double> re(values.size());
    std::transform(values.begin(), values.end(), re.begin(), [](Complex c) { return c.real(); });
    return ScalarField(spec.grid(), std::move(re));
}

std::vector<std::size_t> neighbor_table(const TorusGrid& grid) {
    const int d = grid.dim();
    const auto n = static_cast<std::size_t>(grid.side());
    std::vector<std::size_t> table(grid.total() * 2 * static_cast<std::size_t>(d));
    for_each_site(grid, [&](std::size_t idx, const Coord& z) {
        for (int k = 0; k < d; ++k) {
            const std::size_t st = grid.stride(k);
            const int pos = z[k] - grid.lo();
            const std::size_t up = pos == grid.side() - 1 ? idx - (n - 1) * st : idx + st;
            const std::size_t down = pos == 0 ? idx + (n - 1) * st : idx - st;
            table[idx * 2 * d + 2 * k] = up;
            table[idx * 2 * d + 2 * k + 1] = down;
        }
    });
    return table;
}

ScalarField apply_graph_laplacian(const ScalarField& field) {
    const TorusGrid& grid = field.grid();
    const auto nbr = neighbor_table(grid);
    const std::size_t deg = 2 * static_cast<std::size_t>(grid.dim());
    std::vector<double> out(grid.total());
    for (std::size_t i = 0; i < grid.total(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < deg; ++k) acc += field[nbr[i * deg + k]];
        out[i] = acc / static_cast<double>(deg) - field[i];
    }
    return ScalarField(grid, std::move(out));
}

}  // namespace divsand
