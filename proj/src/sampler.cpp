#include "divsand/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "divsand/errors.hpp"

namespace divsand {

std::mt19937_64 RngStream::engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    return std::mt19937_64(seq);
}

SigmaSampler::SigmaSampler(const KernelSpec& kernel, const TorusGrid& grid, SamplerOptions options)
    : grid_(grid), mult_(multiplier_table(kernel, grid)) {
    const std::size_t total = grid.total();
    double scale = 0.0;
    for (double v : mult_) scale = std::max(scale, std::abs(v));

    partner_.resize(total);
    amp_.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        partner_[i] = grid.negated_index(i);
        if (std::abs(mult_[i] - mult_[partner_[i]]) > 1e-12 * std::max(scale, 1e-300)) {
            const Coord xi = grid.coords_of(i);
            throw KernelInvalidError(kernel_name(kernel) + " multiplier is not symmetric at " +
                                         format_coord(xi, grid.dim()),
                                     xi, grid.dim());
        }
    }
    for (std::size_t i = 0; i < total; ++i) {
        if (!std::isfinite(mult_[i]) || mult_[i] < 0.0) {
            const Coord xi = grid.coords_of(i);
            if (options.psd_repair == PsdRepair::None || !std::isfinite(mult_[i])) {
                throw KernelInvalidError(kernel_name(kernel) + " multiplier is negative (" +
                                             std::to_string(mult_[i]) + ") at frequency " +
                                             format_coord(xi, grid.dim()),
                                         xi, grid.dim());
            }
            mult_[i] = 0.0;
            ++clipped_;
        }
    }
    // Paired modes (xi, -xi) share one complex Gaussian A with E|A|^2 = K^(xi),
    // split evenly between real and imaginary parts. Self-conjugate modes
    // (xi = -xi mod n: the origin and, for even n, the Nyquist planes) are
    // real, so their single real deviate carries the whole variance.
    for (std::size_t i = 0; i < total; ++i) {
        const bool self = partner_[i] == i;
        amp_[i] = std::sqrt(self ? mult_[i] : 0.5 * mult_[i]);
    }
}

ScalarField SigmaSampler::sample(const RngStream& rng) const {
    auto gen = rng.engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t total = grid_.total();
    std::vector<Complex> modes(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t j = partner_[i];
        if (j == i) {
            modes[i] = amp_[i] * normal(gen);
        } else if (i < j) {
            const double re = normal(gen);
            const double im = normal(gen);
            modes[i] = Complex(amp_[i] * re, amp_[i] * im);
            modes[j] = std::conj(modes[i]);
        }
    }
    auto values = dft_inverse_complex(Spectrum(grid_, std::move(modes)));
    double re_max = 0.0;
    double im_max = 0.0;
    for (const Complex& c : values) {
        re_max = std::max(re_max, std::abs(c.real()));
        im_max = std::max(im_max, std::abs(c.imag()));
    }
    if (im_max > 1e-12 * std::max(re_max, 1e-300) && im_max > 0.0) {
        throw NumericalError("synthesized field has imaginary residue " + std::to_string(im_max));
    }
    std::vector<double> out(total);
    for (std::size_t i = 0; i < total; ++i) out[i] = values[i].real();
    return ScalarField(grid_, std::move(out));
}

ScalarField sample_sigma(const KernelSpec& kernel, const TorusGrid& grid, const RngStream& rng,
                         SamplerOptions options) {
    return SigmaSampler(kernel, grid, options).sample(rng);
}

SandpileConfig initial_configuration(const ScalarField& sigma) {
    const double mean = sigma.mean();
    std::vector<double> s(sigma.values().size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0 + (sigma[i] - mean);
    return SandpileConfig{sigma.grid(), ScalarField(sigma.grid(), std::move(s)), sigma};
}

ScalarField rescaled_sigma(const ScalarField& sigma, double exponent) {
    const double factor = std::pow(static_cast<double>(sigma.grid().side()), exponent);
    std::vector<double> out(sigma.values());
    for (double& v : out) v *= factor;
    return ScalarField(sigma.grid(), std::move(out));
}

}  // namespace divsand
