#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "divsand/grid.hpp"
#include "divsand/kernels.hpp"

namespace divsand {

/// One reproducible random stream: the replicate index selects the stream.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    std::mt19937_64 engine() const;
};

/// What to do with non-positive multipliers when sampling.
enum class PsdRepair {
    None,  ///< refuse with KernelInvalidError
    Clip,  ///< draw those modes with variance 0 (nearest PSD circulant)
};

struct SamplerOptions {
    PsdRepair psd_repair = PsdRepair::None;
};

/**
 * Spectral synthesis of a stationary Gaussian field with covariance K_n.
 * The mode amplitudes are fixed at construction, so one sampler can serve
 * many replicates; sample() is const and safe to call concurrently.
 */
class SigmaSampler {
  public:
    SigmaSampler(const KernelSpec& kernel, const TorusGrid& grid, SamplerOptions options = {});

    const TorusGrid& grid() const { return grid_; }
    /// Number of frequencies whose multiplier was negative and got clipped.
    std::size_t clipped_modes() const { return clipped_; }
    /// Multipliers actually used (after clipping).
    const std::vector<double>& multipliers() const { return mult_; }

    ScalarField sample(const RngStream& rng) const;

  private:
    TorusGrid grid_;
    std::vector<double> mult_;
    std::vector<double> amp_;
    std::vector<std::size_t> partner_;
    std::size_t clipped_ = 0;
};

ScalarField sample_sigma(const KernelSpec& kernel, const TorusGrid& grid, const RngStream& rng,
                         SamplerOptions options = {});

/// Sandpile initial state s = 1 + sigma - mean(sigma).
struct SandpileConfig {
    TorusGrid grid;
    ScalarField s;
    ScalarField sigma;
};

SandpileConfig initial_configuration(const ScalarField& sigma);

/// sigma * n^exponent.
ScalarField rescaled_sigma(const ScalarField& sigma, double exponent);

}  // namespace divsand
