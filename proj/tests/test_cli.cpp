#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "divsand/cli.hpp"
#include "divsand/dsgf.hpp"
#include "divsand/errors.hpp"

using namespace divsand;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("divsand_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("settings parsing") {
    std::istringstream in("# comment\nseed = 7\nkernel.variant = direct_multiplier # trailing\n\nout = x\n");
    const cli::Settings raw = cli::parse_settings(in);
    CHECK(raw.at("seed") == "7");
    CHECK(raw.at("kernel.variant") == "direct_multiplier");
    const cli::Settings s = cli::normalize_settings(raw);
    CHECK(s.at("run.seed") == "7");
    CHECK(s.at("run.out_dir") == "x");

    std::istringstream bad("no equals sign\n");
    CHECK_THROWS_AS(cli::parse_settings(bad), ValidationError);
    CHECK_THROWS_AS(cli::normalize_settings({{"kernel.colour", "red"}}), ValidationError);
    CHECK_THROWS_AS(cli::resolve_config({{"run.dim", "0"}}), ValidationError);
    CHECK_THROWS_AS(cli::resolve_config({{"run.n", "abc"}}), ValidationError);
    CHECK_THROWS_AS(cli::resolve_config({{"kernel.variant", "gaussian"}}), ValidationError);

    const cli::RunConfig cfg = cli::resolve_config(
        {{"run.dim", "1"}, {"run.n", "8,16"}, {"kernel.variant", "power_law"}, {"kernel.sign", "-"}});
    CHECK(cfg.dim == 1);
    CHECK(cfg.sides == std::vector<int>{8, 16});
    CHECK(std::get<PowerLaw>(cfg.kernel).sign == -1);
    CHECK(cfg.test_function.dim() == 1);
}

TEST_CASE("test function rows") {
    const TestFunction f = cli::parse_modes("1,0,1,0; -1,0,1,0", 2);
    CHECK(f.modes().size() == 2);
    CHECK_THROWS_AS(cli::parse_modes("1,0,1,0", 2), ValidationError);
    CHECK_THROWS_AS(cli::parse_modes("1,1,0", 2), ValidationError);
}

TEST_CASE("CSV quoting and line endings") {
    const fs::path dir = fresh_dir("csv");
    {
        cli::CsvWriter w(dir / "t.csv", {"a", "b"});
        w.row({"1", "x,\"y\""});
        CHECK_THROWS_AS(w.row({"only one"}), std::logic_error);
    }
    CHECK(slurp(dir / "t.csv") == "a,b\r\n1,\"x,\"\"y\"\"\"\r\n");
    CHECK(cli::format_real(0.1) == "0.1");
    CHECK(std::stod(cli::format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("PGM round trip") {
    const fs::path dir = fresh_dir("pgm");
    const TorusGrid g(2, 4);
    std::vector<double> v(16);
    for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i) - 3.0;
    const cli::PgmBounds b = cli::write_pgm16(dir / "a.pgm", ScalarField(g, v));
    CHECK(b.min == -3.0);
    CHECK(b.max == 12.0);
    const std::string bytes = slurp(dir / "a.pgm");
    CHECK(bytes.substr(0, 13) == "P5\n4 4\n65535\n");
    CHECK(bytes.size() == 13 + 32);
    const cli::PgmImage img = cli::read_pgm(dir / "a.pgm");
    CHECK(img.width == 4);
    CHECK(img.maxval == 65535);
    CHECK(img.pixels.front() == 0);
    CHECK(img.pixels.back() == 65535);
    CHECK(img.pixels[1] == 65535 / 15);

    std::ofstream(dir / "short.pgm", std::ios::binary) << bytes.substr(0, bytes.size() - 1);
    CHECK_THROWS_AS(cli::read_pgm(dir / "short.pgm"), ValidationError);
    CHECK_THROWS_AS(cli::write_pgm16(dir / "b.pgm", ScalarField(TorusGrid(1, 4))), ValidationError);
}

TEST_CASE("usage errors exit with status 1") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({"stabilize", "--no-such-flag"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
    const Outcome bad = invoke({"stabilize", "--dim", "2", "--n", "-3", "--out", fresh_dir("bad").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("error") != std::string::npos);
}

TEST_CASE("numerical failure exits with status 2") {
    const fs::path dir = fresh_dir("budget");
    const Outcome o = invoke({"stabilize", "--dim", "2", "--n", "8", "--max-rounds", "3", "--method", "toppling",
                              "--out", dir.string()});
    CHECK(o.code == 2);
}

TEST_CASE("stabilize writes the resolved config and agreeing odometers") {
    const fs::path dir = fresh_dir("stabilize");
    const Outcome o = invoke({"stabilize", "--method", "both", "--seed", "42", "--dim", "2", "--n", "16",
                              "--out", dir.string()});
    REQUIRE(o.code == 0);
    const std::string cfg = slurp(dir / "resolved_config.txt");
    CHECK(cfg.find(cli::kVersion) != std::string::npos);
    CHECK(cfg.find("run.seed = 42") != std::string::npos);
    CHECK(cfg.find("kernel.variant = white_noise") != std::string::npos);

    const auto pos = o.out.find("max_abs_discrepancy=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(o.out.substr(pos + 20)) <= 1e-6);

    const ScalarField t = read_dsgf(dir / "odometer_toppling_n16_r0.dsgf");
    const ScalarField s = read_dsgf(dir / "odometer_spectral_n16_r0.dsgf");
    for (std::size_t i = 0; i < t.values().size(); ++i) CHECK(std::abs(t[i] - s[i]) <= 1e-6);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "discrepancy.csv"));
}

TEST_CASE("outputs are byte-identical for identical inputs") {
    const fs::path a = fresh_dir("repro_a"), b = fresh_dir("repro_b");
    const fs::path cfg = fresh_dir("repro_cfg") / "run.cfg";
    std::ofstream(cfg) << "kernel.variant = fractional_spectral\nkernel.s = 0.5\nrun.dim = 2\nrun.n = 8\n"
                          "run.replicates = 3\nrun.seed = 11\n";
    for (const fs::path& d : {a, b}) {
        REQUIRE(invoke({"--config", cfg.string(), "sample-sigma", "--csv", "--out", d.string()}).code == 0);
        REQUIRE(invoke({"--config", cfg.string(), "stabilize", "--out", d.string()}).code == 0);
    }
    for (const char* name : {"sigma.csv", "sigma_n8_r2.dsgf", "summary.csv", "odometer_toppling_n8_r1.dsgf",
                             "odometer_spectral_n8_r0.dsgf"}) {
        INFO(name);
        CHECK(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    const fs::path c = fresh_dir("repro_c");
    REQUIRE(invoke({"--config", cfg.string(), "--seed", "12", "sample-sigma", "--out", c.string()}).code == 0);
    CHECK(slurp(a / "sigma_n8_r0.dsgf") != slurp(c / "sigma_n8_r0.dsgf"));
}

TEST_CASE("validate-kernel reports the offending frequency") {
    const fs::path dir = fresh_dir("validate");
    std::ofstream(dir / "table.csv") << "xi_1,value\n-2,1\n-1,0.5\n0,1\n1,0.5\n";
    const Outcome ok = invoke({"validate-kernel", "--dim", "1", "--n", "4", "--set",
                               "kernel.variant=table", "--set", "kernel.table_path=" + (dir / "table.csv").string(),
                               "--out", dir.string(), "--brute-force"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("is_valid=true") != std::string::npos);

    std::ofstream(dir / "neg.csv") << "-2,1\n-1,-0.5\n0,1\n1,-0.5\n";
    const Outcome bad = invoke({"validate-kernel", "--dim", "1", "--n", "4", "--set",
                                "kernel.variant=table", "--set", "kernel.table_path=" + (dir / "neg.csv").string(),
                                "--out", dir.string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("offending frequency (") != std::string::npos);
    const std::string report = slurp(dir / "psd_report.csv");
    CHECK(report.find("false") != std::string::npos);
    CHECK((report.find("(1)") != std::string::npos || report.find("(-1)") != std::string::npos));
}

TEST_CASE("analysis subcommands write their tables") {
    const fs::path dir = fresh_dir("analysis");
    const std::vector<std::string> common{"--dim", "2", "--set", "kernel.variant=direct_multiplier",
                                          "--out", dir.string()};
    auto with = [&](std::vector<std::string> a) {
        a.insert(a.end(), common.begin(), common.end());
        return invoke(a);
    };
    CHECK(with({"variance-convergence", "--n", "8,16,32,64"}).code == 0);
    const std::string sweep = slurp(dir / "sweep.csv");
    CHECK(sweep.rfind("n,finite_n,limit,gap\r\n", 0) == 0);
    CHECK(sweep.find("\r\n64,2.003") != std::string::npos);

    CHECK(with({"monte-carlo", "--n", "8", "--replicates", "200"}).code == 0);
    CHECK(slurp(dir / "monte_carlo.csv").find("mc_stderr") != std::string::npos);
    CHECK(with({"monte-carlo", "--n", "8", "--replicates", "20"}).code == 1);

    CHECK(with({"tightness", "--n", "8,16", "--replicates", "20"}).code == 0);
    CHECK(slurp(dir / "tightness.csv").find("max_tail_ratio") != std::string::npos);
    CHECK(with({"tightness", "--n", "8", "--epsilon", "1.2"}).code == 1);
}

TEST_CASE("render writes a P5 image and a sidecar") {
    const fs::path dir = fresh_dir("render");
    const Outcome o = invoke({"render", "--dim", "2", "--n", "32", "--seed", "3", "--set", "kernel.variant=power_law",
                              "--out", dir.string()});
    REQUIRE(o.code == 0);
    const cli::PgmImage img = cli::read_pgm(dir / "odometer.pgm");
    CHECK(img.width == 32);
    CHECK(img.height == 32);
    const std::string side = slurp(dir / "odometer.txt");
    CHECK(side.find("min = 0") != std::string::npos);
    CHECK(side.find("kernel = power_law+") != std::string::npos);

    const fs::path again = fresh_dir("render_input");
    REQUIRE(invoke({"render", "--input", (dir / "odometer.dsgf").string(), "--out", again.string()}).code == 0);
    CHECK(slurp(again / "odometer.pgm") == slurp(dir / "odometer.pgm"));
    CHECK(invoke({"render", "--dim", "1", "--n", "8", "--out", again.string()}).code == 1);
}
