#include "advforge/embedding.hpp"

#include <cmath>

#include "advforge/common.hpp"
#include "advforge/transform.hpp"

namespace advforge::imaging {

void EmbeddingRatios::validate() const {
    if (!(r1 > 0.0 && r1 <= r2 && r2 <= r3 && r3 <= 1.0))
        throw InvalidInput("embedding ratios must satisfy 0 < r1 <= r2 <= r3 <= 1");
    if (p_small < 0.0 || p_small > 1.0)
        throw InvalidInput("p_small must lie in [0, 1]");
}

BBox place_from_draws(double band_u, double side_u, double cx_u, double cy_u, int frame_size,
                      const EmbeddingRatios& ratios) {
    ratios.validate();
    if (frame_size < 16) throw InvalidInput("frame_size must be at least 16");
    double m, a;
    if (band_u > 1.0 - ratios.p_small) {
        m = ratios.r2 - ratios.r1;
        a = ratios.r1;
    } else {
        m = ratios.r3 - ratios.r2;
        a = ratios.r2;
    }
    const double side = side_u * m + a;
    const double s_f = 3.0 / frame_size;
    const double span = 1.0 - side - 2.0 * s_f;
    if (span < 0.0) throw InfeasiblePlacement("sign side leaves no room inside the safety margin");
    BBox box;
    box.w = side;
    box.h = side;
    box.cx = cx_u * span + 0.5 * side + s_f;
    box.cy = cy_u * span + 0.5 * side + s_f;
    return box;
}

BBox place_foreground(Rng& rng, int frame_size, const EmbeddingRatios& ratios) {
    const double band_u = rng.unit();
    const double side_u = rng.unit();
    const double cx_u = rng.unit();
    const double cy_u = rng.unit();
    return place_from_draws(band_u, side_u, cx_u, cy_u, frame_size, ratios);
}

PixelRect bbox_pixel_rect(const BBox& bbox, int frame_h, int frame_w) {
    PixelRect r;
    r.x0 = int(std::lround((bbox.cx - 0.5 * bbox.w) * frame_w));
    r.y0 = int(std::lround((bbox.cy - 0.5 * bbox.h) * frame_h));
    r.w = std::max(1, int(std::lround(bbox.w * frame_w)));
    r.h = std::max(1, int(std::lround(bbox.h * frame_h)));
    if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > frame_w || r.y0 + r.h > frame_h)
        throw InfeasiblePlacement("bbox pixel rectangle falls outside the frame");
    return r;
}

Image embed(const Image& background, const Image& sign, const BBox& bbox) {
    validate_image(background);
    validate_image(sign);
    const PixelRect r = bbox_pixel_rect(bbox, background.h, background.w);
    const Image resized = resize_bilinear(sign, r.h, r.w);
    Image out = background;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                out.at(c, r.y0 + y, r.x0 + x) = resized.at(c, y, x);
    return out;
}

Image embed_sign_grad(const Image& grad_out, const Image& sign, const BBox& bbox) {
    const PixelRect r = bbox_pixel_rect(bbox, grad_out.h, grad_out.w);
    Image crop;
    crop.h = r.h;
    crop.w = r.w;
    crop.v.resize(size_t(3) * r.h * r.w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                crop.at(c, y, x) = grad_out.at(c, r.y0 + y, r.x0 + x);
    return resize_bilinear_grad(crop, sign.h, sign.w);
}

} // namespace advforge::imaging
