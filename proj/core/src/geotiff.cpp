// Minimal GeoTIFF support: classic TIFF, uncompressed float32 strips,
// chunky pixel layout, georeferencing via ModelPixelScale + ModelTiepoint
// (or ModelTransformation on read). Covers the rasters this pipeline
// produces and the common float32 exports of GIS tools; tiled or
// compressed files are rejected with a clear message.

#include "canopy/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace canopy {

namespace {

constexpr uint16_t kTagImageWidth = 256;
constexpr uint16_t kTagImageLength = 257;
constexpr uint16_t kTagBitsPerSample = 258;
constexpr uint16_t kTagCompression = 259;
constexpr uint16_t kTagPhotometric = 262;
constexpr uint16_t kTagStripOffsets = 273;
constexpr uint16_t kTagSamplesPerPixel = 277;
constexpr uint16_t kTagRowsPerStrip = 278;
constexpr uint16_t kTagStripByteCounts = 279;
constexpr uint16_t kTagPlanarConfig = 284;
constexpr uint16_t kTagTileWidth = 322;
constexpr uint16_t kTagExtraSamples = 338;
constexpr uint16_t kTagSampleFormat = 339;
constexpr uint16_t kTagModelPixelScale = 33550;
constexpr uint16_t kTagModelTiepoint = 33922;
constexpr uint16_t kTagModelTransform = 34264;

constexpr uint16_t kTypeShort = 3;
constexpr uint16_t kTypeLong = 4;
constexpr uint16_t kTypeDouble = 12;

size_t type_size(uint16_t type) {
    switch (type) {
        case 1: case 2: case 6: case 7: return 1; // BYTE, ASCII, SBYTE, UNDEFINED
        case 3: case 8: return 2;                 // SHORT, SSHORT
        case 4: case 9: case 11: return 4;        // LONG, SLONG, FLOAT
        case 5: case 10: case 12: return 8;       // RATIONAL, SRATIONAL, DOUBLE
        default: return 0;
    }
}

class ByteReader {
public:
    ByteReader(std::vector<uint8_t> data, bool swap, std::string name)
        : data_(std::move(data)), swap_(swap), name_(std::move(name)) {}

    uint16_t u16(size_t off) const {
        check(off, 2);
        uint16_t v;
        std::memcpy(&v, data_.data() + off, 2);
        if (swap_) v = __builtin_bswap16(v);
        return v;
    }
    uint32_t u32(size_t off) const {
        check(off, 4);
        uint32_t v;
        std::memcpy(&v, data_.data() + off, 4);
        if (swap_) v = __builtin_bswap32(v);
        return v;
    }
    double f64(size_t off) const {
        check(off, 8);
        uint64_t v;
        std::memcpy(&v, data_.data() + off, 8);
        if (swap_) v = __builtin_bswap64(v);
        return std::bit_cast<double>(v);
    }
    float f32(size_t off) const {
        const uint32_t v = u32(off);
        return std::bit_cast<float>(v);
    }
    size_t size() const { return data_.size(); }
    void check(size_t off, size_t n) const {
        if (off + n > data_.size())
            throw ParseError(name_ + ": truncated TIFF (read past end of file)");
    }

private:
    std::vector<uint8_t> data_;
    bool swap_;
    std::string name_;
};

struct TagValues {
    uint16_t type = 0;
    std::vector<double> values; // integral values widened to double
};

// Values of one IFD entry; integral types widened, DOUBLE read natively.
TagValues read_entry_values(const ByteReader& r, size_t entry_off) {
    TagValues out;
    out.type = r.u16(entry_off + 2);
    const uint32_t count = r.u32(entry_off + 4);
    const size_t ts = type_size(out.type);
    if (ts == 0 || count == 0) return out;
    const size_t total = ts * count;
    size_t value_off = (total <= 4) ? entry_off + 8 : r.u32(entry_off + 8);
    out.values.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const size_t off = value_off + i * ts;
        switch (out.type) {
            case 3: out.values.push_back(r.u16(off)); break;
            case 4: out.values.push_back(r.u32(off)); break;
            case 12: out.values.push_back(r.f64(off)); break;
            case 1: case 2: case 6: case 7: {
                r.check(off, 1);
                out.values.push_back(0);
                break;
            }
            default:
                out.values.push_back(0); // types we never consume
        }
    }
    return out;
}

class ByteWriter {
public:
    void u8(uint8_t v) { append(&v, 1); }
    void u16(uint16_t v) { append(&v, 2); }
    void u32(uint32_t v) { append(&v, 4); }
    void f32(float v) { append(&v, 4); }
    void f64(double v) { append(&v, 8); }
    void patch_u32(size_t off, uint32_t v) { std::memcpy(buf_.data() + off, &v, 4); }
    size_t size() const { return buf_.size(); }
    const std::vector<uint8_t>& bytes() const { return buf_; }

private:
    void append(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<uint8_t> buf_;
};

struct IfdEntry {
    uint16_t tag;
    uint16_t type;
    uint32_t count;
    std::vector<uint32_t> ints;   // SHORT/LONG payload
    std::vector<double> doubles;  // DOUBLE payload
};

} // namespace

Raster load_geotiff(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 8)
        throw ParseError(path.string() + ": not a TIFF file (too short)");

    bool swap;
    if (bytes[0] == 'I' && bytes[1] == 'I') {
        swap = std::endian::native != std::endian::little;
    } else if (bytes[0] == 'M' && bytes[1] == 'M') {
        swap = std::endian::native != std::endian::big;
    } else {
        throw ParseError(path.string() + ": not a TIFF file (bad byte-order mark)");
    }
    ByteReader r(std::move(bytes), swap, path.string());
    if (r.u16(2) != 42)
        throw ParseError(path.string() + ": not a classic TIFF (magic != 42)");

    const size_t ifd_off = r.u32(4);
    const uint16_t n_entries = r.u16(ifd_off);

    uint32_t width = 0, height = 0, samples = 1, rows_per_strip = 0xFFFFFFFFu;
    uint32_t compression = 1, planar = 1;
    std::vector<double> bits, sample_format, strip_offsets, strip_counts;
    std::vector<double> pixel_scale, tiepoint, model_transform;
    bool tiled = false;

    for (uint16_t i = 0; i < n_entries; ++i) {
        const size_t eo = ifd_off + 2 + i * 12;
        const uint16_t tag = r.u16(eo);
        switch (tag) {
            case kTagImageWidth: width = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagImageLength: height = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagBitsPerSample: bits = read_entry_values(r, eo).values; break;
            case kTagCompression: compression = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagStripOffsets: strip_offsets = read_entry_values(r, eo).values; break;
            case kTagSamplesPerPixel: samples = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagRowsPerStrip: rows_per_strip = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagStripByteCounts: strip_counts = read_entry_values(r, eo).values; break;
            case kTagPlanarConfig: planar = static_cast<uint32_t>(read_entry_values(r, eo).values.at(0)); break;
            case kTagSampleFormat: sample_format = read_entry_values(r, eo).values; break;
            case kTagModelPixelScale: pixel_scale = read_entry_values(r, eo).values; break;
            case kTagModelTiepoint: tiepoint = read_entry_values(r, eo).values; break;
            case kTagModelTransform: model_transform = read_entry_values(r, eo).values; break;
            case kTagTileWidth: tiled = true; break;
            default: break;
        }
    }

    if (tiled)
        throw ParseError(path.string() + ": tiled TIFFs are not supported (strip layout only)");
    if (compression != 1)
        throw ParseError(path.string() + ": compressed TIFFs are not supported (compression=" +
                         std::to_string(compression) + ")");
    if (planar != 1)
        throw ParseError(path.string() + ": planar configuration " + std::to_string(planar) +
                         " not supported (chunky only)");
    if (width == 0 || height == 0)
        throw ParseError(path.string() + ": missing image dimensions");
    if (samples < 1 || samples > 4)
        throw ParseError(path.string() + ": " + std::to_string(samples) +
                         " samples per pixel (expected 1..4)");
    for (double b : bits)
        if (b != 32.0)
            throw ParseError(path.string() + ": only 32-bit samples supported");
    if (bits.empty())
        throw ParseError(path.string() + ": missing BitsPerSample");
    if (sample_format.empty())
        throw ParseError(path.string() + ": missing SampleFormat (need IEEE float)");
    for (double f : sample_format)
        if (f != 3.0)
            throw ParseError(path.string() + ": only IEEE-float samples supported");
    if (strip_offsets.empty() || strip_counts.size() != strip_offsets.size())
        throw ParseError(path.string() + ": missing or inconsistent strip tables");

    WorldTransform t;
    if (!pixel_scale.empty() && !tiepoint.empty()) {
        if (pixel_scale.size() < 2 || tiepoint.size() < 6)
            throw ParseError(path.string() + ": malformed geotransform tags");
        const double sx = pixel_scale[0];
        const double sy = pixel_scale[1];
        if (!(sx > 0) || !(sy > 0))
            throw ParseError(path.string() + ": pixel scale must be positive");
        if (std::abs(sx - sy) > 1e-9 * std::max(sx, sy))
            throw InvariantViolation(path.string() + ": non-square pixels (" +
                                     format_double(sx) + " x " + format_double(sy) + ")");
        t.gsd = sx;
        // Tiepoint maps raster point (I,J) to world (X,Y).
        t.origin_x = tiepoint[3] - tiepoint[0] * sx;
        t.origin_y = tiepoint[4] + tiepoint[1] * sy;
    } else if (model_transform.size() >= 16) {
        const double a = model_transform[0], b = model_transform[1];
        const double d = model_transform[4], e = model_transform[5];
        if (b != 0.0 || d != 0.0)
            throw InvariantViolation(path.string() + ": rotated rasters are not supported");
        if (!(a > 0) || !(e < 0) || std::abs(a + e) > 1e-9 * a)
            throw InvariantViolation(path.string() + ": expected north-up square pixels");
        t.gsd = a;
        t.origin_x = model_transform[3];
        t.origin_y = model_transform[7];
    } else {
        throw ParseError(path.string() +
                         ": no geotransform tags (ModelPixelScale+ModelTiepoint or "
                         "ModelTransformation required)");
    }
    t.rows = static_cast<int>(height);
    t.cols = static_cast<int>(width);

    const uint32_t rps = std::min(rows_per_strip, height);
    const size_t n_strips = strip_offsets.size();
    const size_t expected_strips = (height + rps - 1) / rps;
    if (n_strips != expected_strips)
        throw ParseError(path.string() + ": strip count " + std::to_string(n_strips) +
                         " does not match rows/rows_per_strip");

    Raster raster(t, static_cast<int>(samples));
    const size_t row_bytes = static_cast<size_t>(width) * samples * 4;
    const size_t plane = static_cast<size_t>(height) * width;
    size_t row = 0;
    for (size_t s = 0; s < n_strips; ++s) {
        const size_t off = static_cast<size_t>(strip_offsets[s]);
        const size_t count = static_cast<size_t>(strip_counts[s]);
        const size_t strip_rows = std::min<size_t>(rps, height - row);
        if (count != strip_rows * row_bytes)
            throw ParseError(path.string() + ": strip " + std::to_string(s) +
                             " byte count mismatch");
        for (size_t rr = 0; rr < strip_rows; ++rr, ++row) {
            for (size_t c = 0; c < width; ++c) {
                for (uint32_t b = 0; b < samples; ++b) {
                    const size_t src = off + (rr * width + c) * samples * 4 + b * 4;
                    raster.values[b * plane + row * width + c] = r.f32(src);
                }
            }
        }
    }
    return raster;
}

void save_geotiff(const Raster& raster, const std::filesystem::path& path) {
    raster.validate();
    const auto& t = raster.transform;
    const uint32_t width = static_cast<uint32_t>(t.cols);
    const uint32_t height = static_cast<uint32_t>(t.rows);
    const uint32_t samples = static_cast<uint32_t>(raster.bands);
    const size_t data_bytes = static_cast<size_t>(width) * height * samples * 4;
    if (data_bytes > (1u << 31))
        throw IoError("save_geotiff: raster too large for classic TIFF: " + path.string());

    // ~4 MB strips keep offsets table small and readers happy.
    const size_t row_bytes = static_cast<size_t>(width) * samples * 4;
    const uint32_t rows_per_strip = static_cast<uint32_t>(
        std::clamp<size_t>((4u << 20) / std::max<size_t>(row_bytes, 1), 1, height));
    const uint32_t n_strips = (height + rows_per_strip - 1) / rows_per_strip;

    std::vector<IfdEntry> entries;
    auto add_ints = [&](uint16_t tag, uint16_t type, std::vector<uint32_t> vals) {
        entries.push_back({tag, type, static_cast<uint32_t>(vals.size()), std::move(vals), {}});
    };
    auto add_doubles = [&](uint16_t tag, std::vector<double> vals) {
        entries.push_back({tag, kTypeDouble, static_cast<uint32_t>(vals.size()), {}, std::move(vals)});
    };

    add_ints(kTagImageWidth, kTypeLong, {width});
    add_ints(kTagImageLength, kTypeLong, {height});
    add_ints(kTagBitsPerSample, kTypeShort, std::vector<uint32_t>(samples, 32));
    add_ints(kTagCompression, kTypeShort, {1});
    add_ints(kTagPhotometric, kTypeShort, {1});
    std::vector<uint32_t> strip_offsets(n_strips, 0); // patched below
    std::vector<uint32_t> strip_counts(n_strips);
    for (uint32_t s = 0; s < n_strips; ++s) {
        const uint32_t strip_rows = std::min(rows_per_strip, height - s * rows_per_strip);
        strip_counts[s] = static_cast<uint32_t>(strip_rows * row_bytes);
    }
    uint32_t off = 8;
    for (uint32_t s = 0; s < n_strips; ++s) {
        strip_offsets[s] = off;
        off += strip_counts[s];
    }
    add_ints(kTagStripOffsets, kTypeLong, strip_offsets);
    add_ints(kTagSamplesPerPixel, kTypeShort, {samples});
    add_ints(kTagRowsPerStrip, kTypeLong, {rows_per_strip});
    add_ints(kTagStripByteCounts, kTypeLong, strip_counts);
    add_ints(kTagPlanarConfig, kTypeShort, {1});
    if (samples > 1)
        add_ints(kTagExtraSamples, kTypeShort, std::vector<uint32_t>(samples - 1, 0));
    add_ints(kTagSampleFormat, kTypeShort, std::vector<uint32_t>(samples, 3));
    add_doubles(kTagModelPixelScale, {t.gsd, t.gsd, 0.0});
    add_doubles(kTagModelTiepoint, {0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0});

    ByteWriter w;
    // Header; IFD follows the pixel data.
    const uint32_t ifd_offset = 8 + static_cast<uint32_t>(data_bytes);
    w.u16(0x4949); // "II"
    w.u16(42);
    w.u32(ifd_offset);

    // Pixel data, chunky order.
    const size_t plane = static_cast<size_t>(height) * width;
    for (uint32_t row = 0; row < height; ++row)
        for (uint32_t c = 0; c < width; ++c)
            for (uint32_t b = 0; b < samples; ++b)
                w.f32(raster.values[b * plane + row * width + c]);

    // IFD.
    w.u16(static_cast<uint16_t>(entries.size()));
    std::vector<size_t> pending_value_offsets(entries.size(), 0);
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        w.u16(e.tag);
        w.u16(e.type);
        w.u32(e.count);
        const size_t ts = type_size(e.type);
        if (ts * e.count <= 4) {
            const size_t pos = w.size();
            if (e.type == kTypeShort) {
                for (uint32_t v : e.ints) w.u16(static_cast<uint16_t>(v));
            } else {
                for (uint32_t v : e.ints) w.u32(v);
            }
            while (w.size() < pos + 4) w.u16(0);
        } else {
            pending_value_offsets[i] = w.size();
            w.u32(0); // patched once the value block lands
        }
    }
    w.u32(0); // no next IFD

    for (size_t i = 0; i < entries.size(); ++i) {
        if (!pending_value_offsets[i]) continue;
        const auto& e = entries[i];
        if (w.size() % 2) w.u8(0); // keep word alignment
        w.patch_u32(pending_value_offsets[i], static_cast<uint32_t>(w.size()));
        if (e.type == kTypeDouble) {
            for (double v : e.doubles) w.f64(v);
        } else if (e.type == kTypeShort) {
            for (uint32_t v : e.ints) w.u16(static_cast<uint16_t>(v));
        } else {
            for (uint32_t v : e.ints) w.u32(v);
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace canopy
