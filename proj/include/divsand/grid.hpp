#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "divsand/coord.hpp"

namespace divsand {

using Complex = std::complex<double>;

/// Largest admissible side length for a given dimension.
int max_side(int dim);

/**
 * The discrete torus Z_n^d. Sites and frequencies share the centered domain
 * [-floor(n/2), ceil(n/2)-1]^d and are stored in lexicographic order with
 * the first coordinate most significant.
 */
class TorusGrid {
  public:
    TorusGrid(int dim, int side);

    int dim() const { return dim_; }
    int side() const { return side_; }
    std::size_t total() const { return total_; }

    /// Smallest and largest centered coordinate.
    int lo() const { return -(side_ / 2); }
    int hi() const { return side_ - side_ / 2 - 1; }

    bool contains(const Coord& z) const;

    /// Throws std::out_of_range for idx >= total().
    Coord coords_of(std::size_t idx) const;
    /// Throws std::out_of_range if z lies outside the centered domain.
    std::size_t index_of(const Coord& z) const;
    /// Index of z after reducing every coordinate modulo n.
    std::size_t index_of_wrapped(const Coord& z) const;

    /// Reduces an integer into [lo, hi] modulo n.
    int wrap(long long c) const;
    /// Index of the site/frequency -z.
    std::size_t negated_index(std::size_t idx) const;

    /// Stride of axis k in the lexicographic layout.
    std::size_t stride(int axis) const;

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) {
        return a.dim_ == b.dim_ && a.side_ == b.side_;
    }

  private:
    int dim_;
    int side_;
    std::size_t total_;
};

/// Calls fn(idx, coord) for every site in storage order.
template <class Fn>
void for_each_site(const TorusGrid& grid, Fn&& fn) {
    Coord z{};
    for (int k = 0; k < grid.dim(); ++k) z[k] = grid.lo();
    for (std::size_t idx = 0; idx < grid.total(); ++idx) {
        fn(idx, static_cast<const Coord&>(z));
        for (int k = grid.dim() - 1; k >= 0; --k) {
            if (z[k] < grid.hi()) {
                ++z[k];
                break;
            }
            z[k] = grid.lo();
        }
    }
}

/// Real values on the torus, one per site. Values are finite.
class ScalarField {
  public:
    explicit ScalarField(const TorusGrid& grid);
    ScalarField(const TorusGrid& grid, std::vector<double> values);

    const TorusGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t idx) const { return values_[idx]; }
    double at(const Coord& z) const { return values_[grid_.index_of(z)]; }

    double sum() const;
    double mean() const { return sum() / static_cast<double>(values_.size()); }
    double min() const;
    double max() const;

  private:
    TorusGrid grid_;
    std::vector<double> values_;
};

/// Fourier coefficients indexed by frequency in the same layout as sites.
class Spectrum {
  public:
    explicit Spectrum(const TorusGrid& grid);
    Spectrum(const TorusGrid& grid, std::vector<Complex> coeffs);

    const TorusGrid& grid() const { return grid_; }
    const std::vector<Complex>& coeffs() const { return coeffs_; }
    Complex operator[](std::size_t idx) const { return coeffs_[idx]; }
    Complex at(const Coord& w) const { return coeffs_[grid_.index_of(w)]; }

    /// max_w |c(w) - conj(c(-w))|.
    double hermitian_defect() const;

  private:
    TorusGrid grid_;
    std::vector<Complex> coeffs_;
};

/// lambda_w = -(4/2d) sum_i sin^2(pi w_i / n).
double laplacian_eigenvalue(const TorusGrid& grid, const Coord& w);
/// All eigenvalues in frequency storage order.
std::vector<double> laplacian_eigenvalues(const TorusGrid& grid);

/// f^(w) = n^{-d} sum_z f(z) exp(-2 pi i z.w / n).
Spectrum dft_forward(const ScalarField& field);
/// f(z) = sum_w c(w) exp(2 pi i z.w / n). Throws ValidationError when the
/// spectrum is not Hermitian ("field would be complex").
ScalarField dft_inverse(const Spectrum& spec);
/// Same synthesis without the realness requirement.
std::vector<Complex> dft_inverse_complex(const Spectrum& spec);

/// (1/2d) sum over the 2d lattice neighbours minus the centre value.
ScalarField apply_graph_laplacian(const ScalarField& field);

/// For every site, the indices of its 2d neighbours (+e_1, -e_1, +e_2, ...).
/// Entry [idx * 2d + 2k] is +e_k, [idx * 2d + 2k + 1] is -e_k.
std::vector<std::size_t> neighbor_table(const TorusGrid& grid);

}  // namespace divsand
