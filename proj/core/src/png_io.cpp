#include "png_io.hpp"

#include <png.h>

#include <cstdio>

#include "canopy/errors.hpp"

namespace canopy::detail {

void write_png8(const std::filesystem::path& path, int width, int height, int channels,
                const std::vector<uint8_t>& data) {
    if (channels < 1 || channels > 4)
        throw InvariantViolation("write_png8: channels must be 1..4, got " +
                                 std::to_string(channels));
    if (data.size() != static_cast<size_t>(width) * height * channels)
        throw InvariantViolation("write_png8: data size does not match width*height*channels");

    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp)
        throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng initialization failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("libpng write failed for " + path.string());
    }

    static const int color_types[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                      PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, color_types[channels - 1], PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(height);
    for (int r = 0; r < height; ++r)
        row_ptrs[r] = const_cast<png_bytep>(data.data() + static_cast<size_t>(r) * width * channels);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

} // namespace canopy::detail
