#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "advforge/image.hpp"
#include "advforge/rng.hpp"

namespace advforge::imaging {

// One draw from the transformation distribution T. The additive noise field is
// pinned by noise_seed, so applying the same spec twice is bit-identical.
struct TransformSpec {
    double rotation_deg = 0.0;
    // Corner displacements as fractions of the side, order TL TR BR BL, (dx,dy) each.
    std::array<double, 8> perspective{};
    double brightness = 0.0;   // additive offset
    double contrast = 1.0;     // gain about mid-gray
    double saturation = 1.0;   // gain toward/away from luma
    double hue = 0.0;          // shift in turns
    double noise_sigma = 0.0;  // per-channel Gaussian sigma
    int blur_kernel = 1;       // odd binomial kernel width: 1 (off), 3, 5
    double resolution_scale = 1.0; // down-up resample factor in (0,1]
    uint64_t noise_seed = 0;

    bool is_geometric_identity() const;
};

// Uniform sampling ranges for every TransformSpec parameter.
struct TransformRanges {
    double rotation_lo = -15.0, rotation_hi = 15.0;
    double perspective_lo = -0.08, perspective_hi = 0.08;
    double brightness_lo = -0.2, brightness_hi = 0.2;
    double contrast_lo = 0.7, contrast_hi = 1.3;
    double saturation_lo = 0.7, saturation_hi = 1.3;
    double hue_lo = -0.05, hue_hi = 0.05;
    double noise_sigma_lo = 0.0, noise_sigma_hi = 0.05;
    std::vector<int> blur_kernels = {1, 3, 5};
    double resolution_lo = 0.3, resolution_hi = 1.0;

    void validate() const;
};

void validate_transform_spec(const TransformSpec& t);

// Draws each parameter uniformly from its range. Draw order is fixed
// (rotation, 8 perspective values, brightness, contrast, saturation, hue,
// noise sigma, blur kernel, resolution scale, noise seed) so a seeded rng
// reproduces the same spec sequence.
TransformSpec sample_transform(Rng& rng, const TransformRanges& ranges);

// Applies the spec in fixed order: geometric warp (rotation composed with
// perspective, one bilinear resample), then brightness, contrast, saturation,
// hue, additive noise, blur, resolution down-up resample, and a final clip to
// [0,1]. Identity parameters skip their stage, so the identity spec is a
// bit-exact no-op. Every stage is linear in the pixel values.
Image apply_transform(const Image& x, const TransformSpec& t);

// Gradient of apply_transform with respect to its input. `output` is the
// forward result (used only to gate the final clip).
Image transform_input_grad(const Image& grad_out, const Image& output, const TransformSpec& t);

// Shared bilinear resampler (half-pixel centers, edge clamp; resizing to the
// same size is a bit-exact copy) and its transpose.
Image resize_bilinear(const Image& img, int oh, int ow);
Image resize_bilinear_grad(const Image& grad_out, int ih, int iw);

} // namespace advforge::imaging
