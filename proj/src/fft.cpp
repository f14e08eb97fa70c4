#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace divsand::detail {

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are built once per shape and kept for the process lifetime.
fftw_plan plan_for(int dim, int side, int sign) {
    static std::map<std::tuple<int, int, int>, PlanHandle> cache;
    std::lock_guard lock(planner_mutex());
    auto key = std::make_tuple(dim, side, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second.get();

    std::vector<int> shape(static_cast<std::size_t>(dim), side);
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(side);
    auto* scratch = fftw_alloc_complex(total);
    fftw_plan plan = fftw_plan_dft(dim, shape.data(), scratch, scratch, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    cache.emplace(key, PlanHandle(plan));
    return plan;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> data, int dim, int side, int sign) {
    fftw_plan plan = plan_for(dim, side, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

const std::vector<std::size_t>& natural_order(const TorusGrid& grid) {
    static std::mutex m;
    static std::map<std::pair<int, int>, std::vector<std::size_t>> cache;
    std::lock_guard lock(m);
    auto key = std::make_pair(grid.dim(), grid.side());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::size_t> perm(grid.total());
    const int n = grid.side();
    for_each_site(grid, [&](std::size_t idx, const Coord& z) {
        std::size_t nat = 0;
        for (int k = 0; k < grid.dim(); ++k) {
            nat = nat * static_cast<std::size_t>(n) + static_cast<std::size_t>((z[k] + n) % n);
        }
        perm[idx] = nat;
    });
    return cache.emplace(key, std::move(perm)).first->second;
}

}  // namespace divsand::detail
