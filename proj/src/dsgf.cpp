#include "divsand/dsgf.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "divsand/errors.hpp"

namespace divsand {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'S', 'G', 'F'};

template <class T>
void put_le(std::ostream& os, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <class T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bytes{};
    if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw ValidationError("DSGF stream truncated");
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

void write_dsgf(std::ostream& os, const ScalarField& field) {
    const TorusGrid& g = field.grid();
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(os, kDsgfVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    put_le<std::uint64_t>(os, static_cast<std::uint64_t>(g.side()));
    for (double v : field.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw Error("failed writing DSGF stream");
}

void write_dsgf(const std::filesystem::path& path, const ScalarField& field) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_dsgf(os, field);
}

ScalarField read_dsgf(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
        throw ValidationError("not a DSGF file (bad magic)");
    }
    const auto version = get_le<std::uint32_t>(is);
    if (version != kDsgfVersion) {
        throw ValidationError("unsupported DSGF version " + std::to_string(version));
    }
    const auto dim = get_le<std::uint32_t>(is);
    const auto side = get_le<std::uint64_t>(is);
    if (dim < 1 || dim > static_cast<std::uint32_t>(kMaxDim) || side < 2 ||
        side > static_cast<std::uint64_t>(max_side(static_cast<int>(dim)))) {
        throw ValidationError("DSGF header has invalid shape d=" + std::to_string(dim) +
                              " n=" + std::to_string(side));
    }
    TorusGrid grid(static_cast<int>(dim), static_cast<int>(side));
    std::vector<double> values(grid.total());
    for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
    return ScalarField(grid, std::move(values));
}

ScalarField read_dsgf(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path.string());
    return read_dsgf(is);
}

}  // namespace divsand
