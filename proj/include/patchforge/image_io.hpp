#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchforge/buffers.hpp"

namespace pf::io {

// Binary PPM (P6, maxval 255). Values are quantized with round(v*255) after
// clamping; reads map bytes back to v/255. Output bytes are deterministic.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Binary PGM (P5, maxval 255), row-major bytes.
void write_pgm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& bytes);

// CSV rows "y,x,u,v" for every masked pixel, scanline order.
void write_uv_csv(const std::string& path, const ViewBuffers& buffers);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace pf::io
