#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cgc/error.hpp"
#include "cgc/tensor.hpp"

namespace cgc {

// 2-D u8 raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw SizeError("image dimensions must be >= 1");
    }
    GrayImage(int w, int h, std::vector<std::uint8_t> px)
        : width(w), height(h), pixels(std::move(px)) {
        if (w < 1 || h < 1) throw SizeError("image dimensions must be >= 1");
        if (pixels.size() != static_cast<std::size_t>(w) * h)
            throw SizeError("pixel count does not match dimensions");
    }

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const GrayImage& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
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

inline int pnm_int(std::istream& in, const char* what) {
    std::string tok = pnm_token(in);
    if (tok.empty()) throw FormatError(std::string("truncated header: missing ") + what);
    for (char ch : tok)
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw FormatError(std::string("bad header value for ") + what + ": " + tok);
    return std::stoi(tok);
}

inline GrayImage read_pnm_impl(const std::filesystem::path& path, bool allow_color) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P') throw FormatError("not a PNM file: " + path.string());
    int channels;
    if (m1 == '5') {
        channels = 1;
    } else if (m1 == '6' && allow_color) {
        channels = 3;
    } else {
        throw FormatError(std::string("unsupported magic P") + m1 + " in " + path.string());
    }

    int w = pnm_int(in, "width");
    int h = pnm_int(in, "height");
    int maxval = pnm_int(in, "maxval");
    if (w < 1 || h < 1) throw FormatError("bad dimensions in " + path.string());
    if (maxval != 255) throw FormatError("maxval must be 255 in " + path.string());
    // pnm_int consumed exactly one whitespace byte after the maxval token.

    std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw FormatError("truncated pixel data in " + path.string());

    if (channels == 1) return GrayImage(w, h, std::move(raw));

    // PPM ingest: convert to gray by luma 0.299 R + 0.587 G + 0.114 B.
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        double y = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
        gray[i] = static_cast<std::uint8_t>(std::llround(y));
    }
    return GrayImage(w, h, std::move(gray));
}

}  // namespace detail

// Strict binary PGM (P5, maxval 255) decode.
inline GrayImage read_pgm(const std::filesystem::path& path) {
    return detail::read_pnm_impl(path, false);
}

// PGM or PPM ingest; color is converted to gray at the file boundary.
inline GrayImage read_pnm(const std::filesystem::path& path) {
    return detail::read_pnm_impl(path, true);
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

// [1, height, width] tensor with values pixel/255 in [0,1].
inline Tensor tensor_from_image(const GrayImage& img) {
    Tensor t({1, static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width)});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = img.pixels[i] / 255.0;
    return t;
}

}  // namespace cgc
