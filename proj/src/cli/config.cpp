#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "divsand/cli.hpp"
#include "divsand/errors.hpp"

namespace divsand::cli {

namespace {

const std::set<std::string> kRunKeys = {
    "dim",    "n",          "seed",         "replicates", "tol",     "max_rounds", "epsilon",
    "cutoff", "scaling",    "sobolev_mode", "psd_repair", "method",  "out_dir",    "threads",
};
const std::set<std::string> kKernelKeys = {"variant",  "sign", "diagonal", "exponent",
                                           "s",        "zero_mode", "table_path"};
const std::set<std::string> kTestFunctionKeys = {"modes", "path"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    return out;
}

long long parse_int(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError(key + ": expected an integer, got '" + text + "'");
    }
    return v;
}

double parse_real(const std::string& key, const std::string& text) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ValidationError(key + ": expected a finite number, got '" + text + "'");
    }
    return v;
}

std::string get(const Settings& s, const std::string& key, const std::string& fallback) {
    auto it = s.find(key);
    return it == s.end() ? fallback : it->second;
}

KernelSpec resolve_kernel(const Settings& s, int dim, Settings& resolved) {
    const std::string type = get(s, "kernel.variant", "white_noise");
    resolved["kernel.variant"] = type;
    auto real_key = [&](const std::string& key, double def) {
        const double v = parse_real(key, get(s, key, format_real(def)));
        resolved[key] = format_real(v);
        return v;
    };
    if (type == "white_noise") return WhiteNoise{};
    if (type == "power_law") {
        PowerLaw k;
        const std::string sign = get(s, "kernel.sign", "+");
        if (sign == "+" || sign == "+1" || sign == "1") {
            k.sign = 1;
        } else if (sign == "-" || sign == "-1") {
            k.sign = -1;
        } else {
            throw ValidationError("kernel.sign must be + or -, got '" + sign + "'");
        }
        resolved["kernel.sign"] = k.sign > 0 ? "+" : "-";
        k.diagonal = real_key("kernel.diagonal", k.diagonal);
        k.exponent = real_key("kernel.exponent", k.exponent);
        return k;
    }
    if (type == "fractional_spectral") {
        FractionalSpectral k;
        k.s = real_key("kernel.s", k.s);
        k.zero_mode = real_key("kernel.zero_mode", k.zero_mode);
        return k;
    }
    if (type == "direct_multiplier") {
        DirectMultiplier k;
        k.s = real_key("kernel.s", k.s);
        k.zero_mode = real_key("kernel.zero_mode", k.zero_mode);
        return k;
    }
    if (type == "table") {
        const std::string path = get(s, "kernel.table_path", "");
        if (path.empty()) throw ValidationError("kernel.variant = table needs kernel.table_path = PATH");
        resolved["kernel.table_path"] = path;
        return load_table_csv(path, dim);
    }
    throw ValidationError("unknown kernel.variant '" + type +
                          "' (white_noise, power_law, fractional_spectral, direct_multiplier, table)");
}

std::string format_modes(const TestFunction& f) {
    std::string out;
    for (const auto& [nu, c] : f.modes()) {
        if (!out.empty()) out += ';';
        for (int k = 0; k < f.dim(); ++k) out += std::to_string(nu[k]) + ',';
        out += format_real(c.real()) + ',' + format_real(c.imag());
    }
    return out;
}

}  // namespace

std::string format_real(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Settings parse_settings(std::istream& in, const std::string& origin) {
    Settings out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

Settings read_settings_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    return parse_settings(in, path.string());
}

Settings normalize_settings(const Settings& raw) {
    Settings out;
    for (const auto& [key, value] : raw) {
        if (key == "version") continue;  // written by resolved_config.txt
        std::string k = key == "out" ? "out_dir" : key;
        const auto dot = k.find('.');
        if (dot == std::string::npos) {
            if (!kRunKeys.count(k)) throw ValidationError("unknown config key '" + key + "'");
            k = "run." + k;
        } else {
            const std::string section = k.substr(0, dot);
            const std::string name = k.substr(dot + 1);
            const bool known = (section == "run" && kRunKeys.count(name)) ||
                               (section == "kernel" && kKernelKeys.count(name)) ||
                               (section == "test_function" && kTestFunctionKeys.count(name));
            if (!known) throw ValidationError("unknown config key '" + key + "'");
        }
        out[k] = value;
    }
    return out;
}

TestFunction parse_modes(const std::string& rows, int dim) {
    std::map<Coord, Complex> modes;
    std::string text = rows;
    std::replace(text.begin(), text.end(), '\n', ';');
    for (const std::string& row : split(text, ';')) {
        if (row.empty()) continue;
        const auto cells = split(row, ',');
        if (static_cast<int>(cells.size()) != dim + 2) {
            throw ValidationError("test function row '" + row + "' needs " +
                                  std::to_string(dim + 2) + " fields (nu_1..nu_d, re, im)");
        }
        Coord nu{};
        for (int k = 0; k < dim; ++k) {
            nu[k] = static_cast<int>(parse_int("test_function", cells[static_cast<std::size_t>(k)]));
        }
        const double re = parse_real("test_function", cells[static_cast<std::size_t>(dim)]);
        const double im = parse_real("test_function", cells[static_cast<std::size_t>(dim) + 1]);
        if (!modes.emplace(nu, Complex(re, im)).second) {
            throw ValidationError("test function frequency " + format_coord(nu, dim) + " repeated");
        }
    }
    if (modes.empty()) throw ValidationError("test function has no modes");
    return TestFunction(dim, std::move(modes));
}

TestFunction load_modes_csv(const std::filesystem::path& path, int dim) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open test function file " + path.string());
    std::string line;
    std::string rows;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (first) {
            first = false;
            // Skip a header row.
            const char c = line.front();
            if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+')) continue;
        }
        rows += line + ';';
    }
    return parse_modes(rows, dim);
}

RunConfig resolve_config(const Settings& s) {
    RunConfig cfg;
    Settings& r = cfg.resolved;

    cfg.dim = static_cast<int>(parse_int("run.dim", get(s, "run.dim", "2")));
    if (cfg.dim < 1 || cfg.dim > kMaxDim) throw ValidationError("run.dim must be in [1, 4]");
    r["run.dim"] = std::to_string(cfg.dim);

    cfg.sides.clear();
    for (const std::string& part : split(get(s, "run.n", "16"), ',')) {
        const auto n = parse_int("run.n", part);
        if (n < 2 || n > max_side(cfg.dim)) {
            throw ValidationError("run.n = " + part + " outside [2, " +
                                  std::to_string(max_side(cfg.dim)) + "] for d=" +
                                  std::to_string(cfg.dim));
        }
        cfg.sides.push_back(static_cast<int>(n));
    }
    if (cfg.sides.empty()) throw ValidationError("run.n is empty");
    {
        std::string joined;
        for (int n : cfg.sides) joined += (joined.empty() ? "" : ",") + std::to_string(n);
        r["run.n"] = joined;
    }

    const auto seed = parse_int("run.seed", get(s, "run.seed", "42"));
    if (seed < 0) throw ValidationError("run.seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
    r["run.seed"] = std::to_string(cfg.seed);

    if (s.count("run.replicates")) {
        const auto m = parse_int("run.replicates", s.at("run.replicates"));
        if (m < 1) throw ValidationError("run.replicates must be positive");
        cfg.replicates = m;
        r["run.replicates"] = std::to_string(m);
    }

    cfg.tol = parse_real("run.tol", get(s, "run.tol", "1e-12"));
    if (!(cfg.tol > 0.0)) throw ValidationError("run.tol must be positive");
    r["run.tol"] = format_real(cfg.tol);

    cfg.max_rounds = parse_int("run.max_rounds", get(s, "run.max_rounds", std::to_string(kDefaultMaxRounds)));
    if (cfg.max_rounds < 1) throw ValidationError("run.max_rounds must be positive");
    r["run.max_rounds"] = std::to_string(cfg.max_rounds);

    if (s.count("run.epsilon")) {
        cfg.epsilon = parse_real("run.epsilon", s.at("run.epsilon"));
        const double threshold = std::max(0.5 * cfg.dim, 0.25 * cfg.dim + 1.0);
        if (!(*cfg.epsilon > threshold)) {
            throw ValidationError("run.epsilon must satisfy eps > max{d/2, d/4 + 1} = " +
                                  format_real(threshold));
        }
    }
    r["run.epsilon"] = format_real(cfg.epsilon.value_or(default_epsilon(cfg.dim)));

    cfg.cutoff = static_cast<int>(parse_int("run.cutoff", get(s, "run.cutoff", "16")));
    if (cfg.cutoff < 1 || cfg.cutoff > 256) throw ValidationError("run.cutoff must be in [1, 256]");
    r["run.cutoff"] = std::to_string(cfg.cutoff);

    const std::string scaling = get(s, "run.scaling", "standard");
    if (scaling == "standard") {
        cfg.scaling = ScalingMode::Standard;
    } else if (scaling == "bilap") {
        cfg.scaling = ScalingMode::Bilap;
    } else {
        throw ValidationError("run.scaling must be standard or bilap");
    }
    r["run.scaling"] = scaling;

    const std::string sob = get(s, "run.sobolev_mode", "half");
    if (sob == "half") {
        cfg.sobolev = SobolevExponent::Half;
    } else if (sob == "full") {
        cfg.sobolev = SobolevExponent::Full;
    } else {
        throw ValidationError("run.sobolev_mode must be half or full");
    }
    r["run.sobolev_mode"] = sob;

    const std::string repair = get(s, "run.psd_repair", "none");
    if (repair == "none") {
        cfg.psd_repair = PsdRepair::None;
    } else if (repair == "clip") {
        cfg.psd_repair = PsdRepair::Clip;
    } else {
        throw ValidationError("run.psd_repair must be none or clip");
    }
    r["run.psd_repair"] = repair;

    cfg.method = get(s, "run.method", "both");
    if (cfg.method != "toppling" && cfg.method != "spectral" && cfg.method != "both") {
        throw ValidationError("run.method must be toppling, spectral or both");
    }
    r["run.method"] = cfg.method;

    cfg.out_dir = get(s, "run.out_dir", ".");
    r["run.out_dir"] = cfg.out_dir.string();

    cfg.threads = static_cast<int>(parse_int("run.threads", get(s, "run.threads", "0")));
    if (cfg.threads < 0) throw ValidationError("run.threads must be nonnegative");
    r["run.threads"] = std::to_string(cfg.threads);

    cfg.kernel = resolve_kernel(s, cfg.dim, r);

    if (s.count("test_function.modes") && s.count("test_function.path")) {
        throw ValidationError("give test_function.modes or test_function.path, not both");
    }
    if (s.count("test_function.path")) {
        cfg.test_function = load_modes_csv(s.at("test_function.path"), cfg.dim);
        r["test_function.path"] = s.at("test_function.path");
    } else if (s.count("test_function.modes")) {
        cfg.test_function = parse_modes(s.at("test_function.modes"), cfg.dim);
    } else {
        Coord e1{};
        e1[0] = 1;
        cfg.test_function = TestFunction::cosine(cfg.dim, e1);
    }
    r["test_function.modes"] = format_modes(cfg.test_function);
    return cfg;
}

void write_resolved_config(const std::filesystem::path& dir, const RunConfig& cfg) {
    std::ofstream out(dir / "resolved_config.txt");
    if (!out) throw ValidationError("cannot write " + (dir / "resolved_config.txt").string());
    out << "# " << kVersion << '\n';
    out << "version = " << kVersion << '\n';
    for (const auto& [key, value] : cfg.resolved) out << key << " = " << value << '\n';
}

}  // namespace divsand::cli
