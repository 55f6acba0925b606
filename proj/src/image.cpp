#include "advforge/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace advforge::imaging {

size_t Mask::popcount() const {
    size_t n = 0;
    for (uint8_t b : v) n += b;
    return n;
}

void validate_image(const Image& img, const char* what) {
    if (img.h < 16 || img.w < 16)
        throw InvalidInput(std::string(what) + ": image dimensions must be >= 16");
    if (img.v.size() != size_t(3) * img.h * img.w)
        throw InvalidInput(std::string(what) + ": image buffer size mismatch");
    for (double x : img.v)
        if (!(x >= 0.0 && x <= 1.0))
            throw InvalidInput(std::string(what) + ": image values must lie in [0,1]");
}

void validate_mask(const Mask& m, const char* what) {
    if (m.v.size() != size_t(m.h) * m.w)
        throw InvalidInput(std::string(what) + ": mask buffer size mismatch");
    size_t ones = 0;
    for (uint8_t b : m.v) {
        if (b > 1) throw InvalidInput(std::string(what) + ": mask values must be 0 or 1");
        ones += b;
    }
    if (ones == 0) throw InvalidInput(std::string(what) + ": mask must set at least one pixel");
}

Image apply_mask(const Image& base, const Image& patch, const Mask& mask) {
    if (!base.same_shape(patch) || base.h != mask.h || base.w != mask.w)
        throw InvalidInput("apply_mask: base, patch and mask dimensions must match");
    validate_mask(mask, "apply_mask");
    Image out(base.h, base.w);
    const size_t plane = size_t(base.h) * base.w;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            const double v = mask.v[i] ? patch.v[c * plane + i] : base.v[c * plane + i];
            out.v[c * plane + i] = clamp01(v);
        }
    return out;
}

Image apply_mask_patch_grad(const Image& grad_out, const Image& base, const Image& patch,
                            const Mask& mask) {
    Image g(patch.h, patch.w);
    const size_t plane = size_t(patch.h) * patch.w;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            if (!mask.v[i]) continue;
            const double v = patch.v[c * plane + i];
            if (v > 0.0 && v < 1.0) g.v[c * plane + i] = grad_out.v[c * plane + i];
        }
    return g;
}

namespace {

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* f = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* f = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

uint8_t to_u8(double v) {
    const double q = std::lround(clamp01(v) * 255.0);
    return static_cast<uint8_t>(q);
}

void write_png_rows(const std::string& path, int h, int w, int color_type,
                    const std::vector<std::vector<uint8_t>>& rows) {
    PngWriteCloser s;
    s.f = std::fopen(path.c_str(), "wb");
    if (!s.f) throw std::runtime_error("write_png: cannot open " + path);
    s.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    s.info = png_create_info_struct(s.png);
    if (setjmp(png_jmpbuf(s.png))) throw std::runtime_error("write_png: libpng failure on " + path);
    png_init_io(s.png, s.f);
    png_set_compression_level(s.png, 6);
    png_set_IHDR(s.png, s.info, w, h, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(s.png, s.info);
    for (const auto& r : rows) png_write_row(s.png, const_cast<png_bytep>(r.data()));
    png_write_end(s.png, nullptr);
}

} // namespace

void write_png(const std::string& path, const Image& img) {
    const size_t plane = size_t(img.h) * img.w;
    std::vector<std::vector<uint8_t>> rows(img.h, std::vector<uint8_t>(size_t(img.w) * 3));
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                rows[y][size_t(x) * 3 + c] = to_u8(img.v[c * plane + size_t(y) * img.w + x]);
    write_png_rows(path, img.h, img.w, PNG_COLOR_TYPE_RGB, rows);
}

void write_mask_png(const std::string& path, const Mask& m) {
    std::vector<std::vector<uint8_t>> rows(m.h, std::vector<uint8_t>(m.w));
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) rows[y][x] = m.at(y, x) ? 255 : 0;
    write_png_rows(path, m.h, m.w, PNG_COLOR_TYPE_GRAY, rows);
}

namespace {

std::vector<std::vector<uint8_t>> read_png_rows(const std::string& path, int& h, int& w,
                                                int want_channels) {
    PngReadCloser s;
    s.f = std::fopen(path.c_str(), "rb");
    if (!s.f) throw std::runtime_error("read_png: cannot open " + path);
    s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    s.info = png_create_info_struct(s.png);
    if (setjmp(png_jmpbuf(s.png))) throw std::runtime_error("read_png: libpng failure on " + path);
    png_init_io(s.png, s.f);
    png_read_info(s.png, s.info);

    png_set_expand(s.png);
    png_set_strip_16(s.png);
    png_set_strip_alpha(s.png);
    if (want_channels == 3)
        png_set_gray_to_rgb(s.png);
    else
        png_set_rgb_to_gray_fixed(s.png, 1, -1, -1);
    png_read_update_info(s.png, s.info);

    h = png_get_image_height(s.png, s.info);
    w = png_get_image_width(s.png, s.info);
    const size_t rowbytes = png_get_rowbytes(s.png, s.info);
    std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(rowbytes));
    for (int y = 0; y < h; ++y) png_read_row(s.png, rows[y].data(), nullptr);
    return rows;
}

} // namespace

Image read_png(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, h, w, 3);
    Image img(h, w);
    const size_t plane = size_t(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.v[c * plane + size_t(y) * w + x] = rows[y][size_t(x) * 3 + c] / 255.0;
    return img;
}

Mask read_mask_png(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_png_rows(path, h, w, 1);
    Mask m(h, w, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.at(y, x) = rows[y][x] >= 128 ? 1 : 0;
    return m;
}

} // namespace advforge::imaging
