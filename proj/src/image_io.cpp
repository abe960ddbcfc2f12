#include "patchforge/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pf::io {

namespace {

uint8_t quantize(double v) {
    return static_cast<uint8_t>(std::lround(clamp01(v) * 255.0));
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

}  // namespace

void write_ppm(const std::string& path, const Image& image) {
    if (image.c != 3) throw ContractViolationError("PPM export expects 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P6\n" << image.w << " " << image.h << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(image.w) * 3);
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x) {
            row[x * 3 + 0] = quantize(image.at(y, x, 0));
            row[x * 3 + 1] = quantize(image.at(y, x, 1));
            row[x * 3 + 2] = quantize(image.at(y, x, 2));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    if (next_token(in) != "P6") throw CorruptInputError("not a binary PPM (P6): " + path);
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw CorruptInputError("malformed PPM header: " + path);
    }
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw CorruptInputError("unsupported PPM header in " + path);
    }
    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw CorruptInputError("truncated PPM payload: " + path);
    }
    Image img(h, w, 3);
    for (size_t i = 0; i < bytes.size(); ++i) img.v[i] = bytes[i] / 255.0;
    return img;
}

void write_pgm(const std::string& path, int width, int height,
               const std::vector<uint8_t>& bytes) {
    if (bytes.size() != static_cast<size_t>(width) * height) {
        throw ContractViolationError("PGM payload size mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

void write_uv_csv(const std::string& path, const ViewBuffers& buffers) {
    std::ostringstream out;
    out << "y,x,u,v\n";
    char line[96];
    for (int y = 0; y < buffers.h; ++y) {
        for (int x = 0; x < buffers.w; ++x) {
            const size_t px = buffers.pixel(y, x);
            if (!buffers.mask[px]) continue;
            std::snprintf(line, sizeof(line), "%d,%d,%.9f,%.9f\n", y, x, buffers.uv[px * 2],
                          buffers.uv[px * 2 + 1]);
            out << line;
        }
    }
    write_text_file(path, out.str());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace pf::io
