#include <algorithm>
#include <cmath>
#include <sstream>

#include "divsand/cli.hpp"
#include "divsand/errors.hpp"

namespace divsand::cli {

namespace {

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), width_(header.size()) {
    if (!out_) throw ValidationError("cannot write " + path.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) {
        throw std::logic_error("CSV row width mismatch in " + path_.string());
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << quote(cells[i]);
    }
    out_ << "\r\n";
    out_.flush();
}

PgmBounds write_pgm16(const std::filesystem::path& path, const ScalarField& field) {
    const TorusGrid& grid = field.grid();
    if (grid.dim() != 2) throw ValidationError("render needs a d=2 field");
    PgmBounds b{field.min(), field.max()};
    const double span = b.max - b.min;
    const int n = grid.side();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "P5\n" << n << ' ' << n << "\n65535\n";
    std::string row(2 * static_cast<std::size_t>(n), '\0');
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = field[static_cast<std::size_t>(i) * n + j];
            const double t = span > 0.0 ? (v - b.min) / span : 0.0;
            const auto px = static_cast<std::uint16_t>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
            row[2 * static_cast<std::size_t>(j)] = static_cast<char>(px >> 8);
            row[2 * static_cast<std::size_t>(j) + 1] = static_cast<char>(px & 0xff);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw ValidationError("write failed for " + path.string());
    return b;
}

PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                continue;
            }
            t += c;
        }
        return t;
    };
    if (token() != "P5") throw ValidationError(path.string() + ": not a binary PGM (P5)");
    PgmImage img;
    try {
        img.width = std::stoi(token());
        img.height = std::stoi(token());
        img.maxval = std::stoi(token());
    } catch (const std::logic_error&) {
        throw ValidationError(path.string() + ": malformed PGM header");
    }
    if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535) {
        throw ValidationError(path.string() + ": invalid PGM dimensions");
    }
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    const std::size_t bytes_per = img.maxval > 255 ? 2 : 1;
    std::string raw(count * bytes_per, '\0');
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw ValidationError(path.string() + ": truncated PGM raster");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ValidationError(path.string() + ": trailing bytes after PGM raster");
    }
    img.pixels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto hi = static_cast<unsigned char>(raw[i * bytes_per]);
        img.pixels[i] = bytes_per == 2
                            ? static_cast<std::uint16_t>(hi << 8 | static_cast<unsigned char>(raw[2 * i + 1]))
                            : hi;
        if (img.pixels[i] > img.maxval) throw ValidationError(path.string() + ": sample above maxval");
    }
    return img;
}

}  // namespace divsand::cli
