#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advforge/common.hpp"

namespace advforge::imaging {

// RGB image, planar CHW layout, values in [0,1].
struct Image {
    int h = 0;
    int w = 0;
    std::vector<double> v; // 3 * h * w

    Image() = default;
    Image(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(size_t(3) * h_ * w_, fill) {}

    double& at(int c, int y, int x) { return v[(size_t(c) * h + y) * w + x]; }
    double at(int c, int y, int x) const { return v[(size_t(c) * h + y) * w + x]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

// Binary perturbation-area map, same spatial size as the patch; 1 = perturbable.
struct Mask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v; // h * w, values in {0,1}

    Mask() = default;
    Mask(int h_, int w_, uint8_t fill = 1) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[size_t(y) * w + x]; }
    size_t popcount() const;
};

// Checks the Image invariants (values in [0,1], both dimensions >= 16).
void validate_image(const Image& img, const char* what = "image");
// Checks the Mask invariants (at least one pixel set, values in {0,1}).
void validate_mask(const Mask& m, const char* what = "mask");

// out = base*(1-mask) + patch*mask, clipped to [0,1].
Image apply_mask(const Image& base, const Image& patch, const Mask& mask);

// Gradient of apply_mask's output with respect to `patch`: passes grad on
// masked pixels wherever the clip was inactive.
Image apply_mask_patch_grad(const Image& grad_out, const Image& base, const Image& patch,
                            const Mask& mask);

// PNG I/O. Images are 8-bit RGB; masks are 8-bit grayscale thresholded at 128
// on load. Writing is deterministic (fixed compression settings, no ancillary
// chunks), so identical pixels give identical files.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);
void write_mask_png(const std::string& path, const Mask& m);
Mask read_mask_png(const std::string& path);

} // namespace advforge::imaging
