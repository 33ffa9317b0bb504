#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace canopy::detail {

// 8-bit PNG writer; channels = 1 (gray), 2 (gray+alpha), 3 (RGB), 4 (RGBA).
// data is row-major, pixel-interleaved, rows*cols*channels bytes.
void write_png8(const std::filesystem::path& path, int width, int height, int channels,
                const std::vector<uint8_t>& data);

} // namespace canopy::detail
