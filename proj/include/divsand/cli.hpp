#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divsand/analysis.hpp"
#include "divsand/kernels.hpp"
#include "divsand/sampler.hpp"

namespace divsand::cli {

inline constexpr const char* kVersion = "divsand 1.0.0";

/// Flat key=value settings. Keys use dotted sections (run.*, kernel.*,
/// test_function.*); run.* keys may also be given without the prefix.
using Settings = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment.
Settings parse_settings(std::istream& in, const std::string& origin = "config");
Settings read_settings_file(const std::filesystem::path& path);

/// Moves un-prefixed run keys ("seed") under run.* and rejects unknown keys.
Settings normalize_settings(const Settings& raw);

struct RunConfig {
    int dim = 2;
    std::vector<int> sides{16};
    KernelSpec kernel = WhiteNoise{};
    std::uint64_t seed = 42;
    std::optional<long> replicates;
    double tol = 1e-12;
    long max_rounds = kDefaultMaxRounds;
    std::optional<double> epsilon;
    int cutoff = 16;
    ScalingMode scaling = ScalingMode::Standard;
    SobolevExponent sobolev = SobolevExponent::Half;
    PsdRepair psd_repair = PsdRepair::None;
    std::string method = "both";
    std::filesystem::path out_dir = ".";
    int threads = 0;
    TestFunction test_function = TestFunction::cosine(2, Coord{1});

    /// Effective settings, one per key, for resolved_config.txt.
    Settings resolved;
};

/// Validates and converts normalized settings. Throws ValidationError.
RunConfig resolve_config(const Settings& settings);

/// Test-function rows "nu_1,...,nu_d,re,im" separated by ';' or newlines.
TestFunction parse_modes(const std::string& rows, int dim);
TestFunction load_modes_csv(const std::filesystem::path& path, int dim);

/// Writes resolved settings plus the version line.
void write_resolved_config(const std::filesystem::path& dir, const RunConfig& cfg);

/// Shortest round-trip decimal text for a double.
std::string format_real(double v);

/// Minimal RFC 4180 CSV writer.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_;
};

struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<std::uint16_t> pixels;
};

struct PgmBounds {
    double min = 0.0;
    double max = 0.0;
};

/// 16-bit binary PGM (P5, big-endian samples) of a d=2 field, min-max
/// normalised to 0..65535. Row i holds first coordinate lo + i.
PgmBounds write_pgm16(const std::filesystem::path& path, const ScalarField& field);
PgmImage read_pgm(const std::filesystem::path& path);

/// Runs the tool with argv-style arguments (without the program name).
/// Returns the process exit status: 0 ok, 1 validation/usage, 2 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace divsand::cli
