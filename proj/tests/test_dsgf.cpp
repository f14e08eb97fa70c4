#include <doctest.h>

#include <cstring>
#include <sstream>

#include "divsand/dsgf.hpp"
#include "divsand/errors.hpp"

using namespace divsand;

TEST_CASE("DSGF byte layout") {
    const TorusGrid g(1, 2);
    std::ostringstream os;
    write_dsgf(os, ScalarField(g, {1.0, -2.5}));
    const std::string b = os.str();
    REQUIRE(b.size() == 4 + 4 + 4 + 8 + 2 * 8);
    CHECK(b.substr(0, 4) == "DSGF");
    const unsigned char version[4] = {1, 0, 0, 0};
    const unsigned char dim[4] = {1, 0, 0, 0};
    const unsigned char side[8] = {2, 0, 0, 0, 0, 0, 0, 0};
    CHECK(std::memcmp(b.data() + 4, version, 4) == 0);
    CHECK(std::memcmp(b.data() + 8, dim, 4) == 0);
    CHECK(std::memcmp(b.data() + 12, side, 8) == 0);
    // 1.0 is 0x3FF0000000000000, stored little-endian.
    const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
    CHECK(std::memcmp(b.data() + 20, one, 8) == 0);
}

TEST_CASE("DSGF round trip is bit exact") {
    const TorusGrid g(3, 5);
    std::vector<double> v(g.total());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(1.0 + i) * 1e-300 + i * 0.1;
    std::stringstream ss;
    write_dsgf(ss, ScalarField(g, v));
    const ScalarField back = read_dsgf(ss);
    CHECK(back.grid() == g);
    CHECK(back.values() == v);
}

TEST_CASE("DSGF reader rejects malformed input") {
    const TorusGrid g(2, 4);
    std::ostringstream os;
    write_dsgf(os, ScalarField(g));
    const std::string good = os.str();

    auto read = [](std::string bytes) {
        std::istringstream is(bytes);
        return read_dsgf(is);
    };
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(read(bad), ValidationError);
    bad = good;
    bad[4] = 2;
    CHECK_THROWS_AS(read(bad), ValidationError);
    bad = good;
    bad[8] = 9;
    CHECK_THROWS_AS(read(bad), ValidationError);
    CHECK_THROWS_AS(read(good.substr(0, good.size() - 3)), ValidationError);
    CHECK_NOTHROW(read(good));
}
