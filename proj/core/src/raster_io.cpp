#include "canopy/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace canopy {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError(context + ": cannot parse number \"" + s + "\"");
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

namespace {

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace

Raster load_raster(const std::filesystem::path& path, bool as_prediction) {
    const std::string ext = lower_ext(path);
    Raster r;
    if (ext == ".asc") {
        r = load_ascii_grid(path);
    } else if (ext == ".tif" || ext == ".tiff") {
        r = load_geotiff(path);
    } else {
        throw IoError("load_raster: unsupported raster extension \"" + ext + "\" for " +
                      path.string() + " (expected .asc, .tif, or .tiff)");
    }
    r.validate(as_prediction);
    return r;
}

void save_raster(const Raster& raster, const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".asc") {
        save_ascii_grid(raster, path);
    } else if (ext == ".tif" || ext == ".tiff") {
        save_geotiff(raster, path);
    } else {
        throw IoError("save_raster: unsupported raster extension \"" + ext + "\" for " +
                      path.string());
    }
}

Raster load_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());

    int ncols = -1, nrows = -1;
    double xll = 0.0, yll = 0.0, cellsize = 0.0;
    bool have_x = false, have_y = false, have_cell = false;

    // Header: key/value pairs until the first purely numeric line.
    std::string token;
    while (in >> token) {
        std::string key = token;
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (key == "ncols") {
            in >> ncols;
        } else if (key == "nrows") {
            in >> nrows;
        } else if (key == "xllcorner") {
            in >> xll;
            have_x = true;
        } else if (key == "yllcorner") {
            in >> yll;
            have_y = true;
        } else if (key == "cellsize") {
            in >> cellsize;
            have_cell = true;
        } else if (key == "nodata_value") {
            double ignored;
            in >> ignored;
        } else {
            break; // first data token
        }
    }
    if (ncols < 1 || nrows < 1 || !have_x || !have_y || !have_cell)
        throw ParseError(path.string() + ": incomplete ASCII grid header");
    if (!(cellsize > 0.0))
        throw ParseError(path.string() + ": cellsize must be positive");

    WorldTransform t;
    t.gsd = cellsize;
    t.origin_x = xll;
    t.origin_y = yll + nrows * cellsize; // top edge
    t.rows = nrows;
    t.cols = ncols;

    Raster r(t, 1);
    const size_t n = static_cast<size_t>(nrows) * ncols;
    size_t i = 0;
    // `token` already holds the first value.
    while (true) {
        if (i >= n)
            throw ParseError(path.string() + ": more than " + std::to_string(n) + " values");
        double v;
        try {
            v = parse_double(token, path.string());
        } catch (const ParseError&) {
            throw ParseError(path.string() + ": bad value \"" + token + "\" at index " +
                             std::to_string(i));
        }
        r.values[i++] = static_cast<float>(v);
        if (!(in >> token)) break;
    }
    if (i != n)
        throw ParseError(path.string() + ": expected " + std::to_string(n) + " values, got " +
                         std::to_string(i));
    r.validate();
    return r;
}

void save_ascii_grid(const Raster& raster, const std::filesystem::path& path) {
    raster.validate();
    if (raster.bands != 1)
        throw BandMismatch("save_ascii_grid: ASCII grid is single band, raster has " +
                           std::to_string(raster.bands));
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    const auto& t = raster.transform;
    out << "ncols " << t.cols << "\n";
    out << "nrows " << t.rows << "\n";
    out << "xllcorner " << format_double(t.origin_x) << "\n";
    out << "yllcorner " << format_double(t.origin_y - t.rows * t.gsd) << "\n";
    out << "cellsize " << format_double(t.gsd) << "\n";
    for (int r = 0; r < t.rows; ++r) {
        for (int c = 0; c < t.cols; ++c) {
            if (c) out << ' ';
            out << format_double(raster.at(0, r, c));
        }
        out << '\n';
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace canopy
