#include "advforge/transform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "advforge/common.hpp"

namespace advforge::imaging {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Rec.601 luma weights used by the saturation stage.
constexpr double kLuma[3] = {0.299, 0.587, 0.114};

struct Mat3 {
    double m[9];

    static Mat3 identity() { return {{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }

    // Projective application to (x, y).
    void apply(double x, double y, double& ox, double& oy) const {
        const double w = m[6] * x + m[7] * y + m[8];
        ox = (m[0] * x + m[1] * y + m[2]) / w;
        oy = (m[3] * x + m[4] * y + m[5]) / w;
    }
};

// Homography H with H(src[i]) = dst[i], via the standard 8x8 linear system
// (h22 fixed to 1), solved by Gaussian elimination with partial pivoting.
Mat3 homography_from_points(const double src[4][2], const double dst[4][2]) {
    double a[8][9] = {};
    for (int i = 0; i < 4; ++i) {
        const double x = src[i][0], y = src[i][1];
        const double u = dst[i][0], v = dst[i][1];
        double* r0 = a[2 * i];
        double* r1 = a[2 * i + 1];
        r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -u * x; r0[7] = -u * y; r0[8] = u;
        r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -v * x; r1[7] = -v * y; r1[8] = v;
    }
    for (int col = 0; col < 8; ++col) {
        int piv = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-12)
            throw InvalidInput("degenerate perspective corner layout");
        if (piv != col)
            for (int c = 0; c < 9; ++c) std::swap(a[piv][c], a[col][c]);
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 9; ++c) a[r][c] -= f * a[col][c];
        }
    }
    Mat3 h{};
    for (int i = 0; i < 8; ++i) h.m[i] = a[i][8] / a[i][i];
    h.m[8] = 1.0;
    return h;
}

// Inverse map for the composed geometric stage: output pixel -> input pixel.
// Forward order is rotation about the image center followed by the corner
// perspective, so the inverse applies the perspective inverse first.
Mat3 geometric_inverse_map(const TransformSpec& t, int h, int w) {
    const double cx = (w - 1) * 0.5, cy = (h - 1) * 0.5;
    const double th = t.rotation_deg * kPi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    // Rotation inverse: rotate by -theta about the center.
    Mat3 rot_inv = {{c, s, cx - c * cx - s * cy,
                     -s, c, cy + s * cx - c * cy,
                     0, 0, 1}};
    const double corners[4][2] = {{0, 0},
                                  {double(w - 1), 0},
                                  {double(w - 1), double(h - 1)},
                                  {0, double(h - 1)}};
    double displaced[4][2];
    for (int i = 0; i < 4; ++i) {
        displaced[i][0] = corners[i][0] + t.perspective[2 * i] * (w - 1);
        displaced[i][1] = corners[i][1] + t.perspective[2 * i + 1] * (h - 1);
    }
    Mat3 persp_inv = homography_from_points(displaced, corners);
    return rot_inv * persp_inv;
}

// Bilinear gather with edge-clamped taps, shared by the warp and both resize
// directions. `scatter` flips it into the transpose (gradient) accumulation.
template <bool scatter>
void bilinear_tap(std::vector<double>& dst_plane,
                  const std::vector<double>& src_plane, int sh, int sw,
                  int y, int x, int dw, double sx, double sy) {
    const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
    const double fx = sx - x0, fy = sy - y0;
    const int xa = std::clamp(x0, 0, sw - 1), xb = std::clamp(x0 + 1, 0, sw - 1);
    const int ya = std::clamp(y0, 0, sh - 1), yb = std::clamp(y0 + 1, 0, sh - 1);
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;
    if constexpr (scatter) {
        const double g = src_plane[size_t(y) * dw + x];
        dst_plane[size_t(ya) * sw + xa] += w00 * g;
        dst_plane[size_t(ya) * sw + xb] += w10 * g;
        dst_plane[size_t(yb) * sw + xa] += w01 * g;
        dst_plane[size_t(yb) * sw + xb] += w11 * g;
    } else {
        dst_plane[size_t(y) * dw + x] =
            w00 * src_plane[size_t(ya) * sw + xa] + w10 * src_plane[size_t(ya) * sw + xb] +
            w01 * src_plane[size_t(yb) * sw + xa] + w11 * src_plane[size_t(yb) * sw + xb];
    }
}

// Plane-at-a-time warp to keep the tap helper single-plane.
Image warp_planes(const Image& in, const Mat3& inv_map, int oh, int ow, bool scatter,
                  int src_h, int src_w) {
    Image out;
    out.h = scatter ? src_h : oh;
    out.w = scatter ? src_w : ow;
    out.v.assign(size_t(3) * out.h * out.w, 0.0);
    for (int c = 0; c < 3; ++c) {
        const std::vector<double>& iv = in.v;
        std::vector<double> src_plane(size_t(in.h) * in.w);
        std::memcpy(src_plane.data(), iv.data() + size_t(c) * in.h * in.w,
                    src_plane.size() * sizeof(double));
        std::vector<double> dst_plane(size_t(out.h) * out.w, 0.0);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double sx, sy;
                inv_map.apply(double(x), double(y), sx, sy);
                if (scatter)
                    bilinear_tap<true>(dst_plane, src_plane, src_h, src_w, y, x, ow, sx, sy);
                else
                    bilinear_tap<false>(dst_plane, src_plane, src_h, src_w, y, x, ow, sx, sy);
            }
        std::memcpy(out.v.data() + size_t(c) * out.h * out.w, dst_plane.data(),
                    dst_plane.size() * sizeof(double));
    }
    return out;
}

// 3x3 channel-mixing matrix for the hue stage: Rodrigues rotation of RGB about
// the gray axis by hue turns. Orthogonal, so the gradient uses the transpose.
void hue_matrix(double hue_turns, double r[9]) {
    const double th = hue_turns * 2.0 * kPi;
    const double c = std::cos(th), s = std::sin(th);
    const double a = 1.0 / std::sqrt(3.0);
    const double oc = (1.0 - c) / 3.0;
    r[0] = c + oc;      r[1] = oc - a * s;  r[2] = oc + a * s;
    r[3] = oc + a * s;  r[4] = c + oc;      r[5] = oc - a * s;
    r[6] = oc - a * s;  r[7] = oc + a * s;  r[8] = c + oc;
}

void mix_channels(Image& img, const double r[9]) {
    const size_t n = size_t(img.h) * img.w;
    for (size_t i = 0; i < n; ++i) {
        const double p0 = img.v[i], p1 = img.v[n + i], p2 = img.v[2 * n + i];
        img.v[i] = r[0] * p0 + r[1] * p1 + r[2] * p2;
        img.v[n + i] = r[3] * p0 + r[4] * p1 + r[5] * p2;
        img.v[2 * n + i] = r[6] * p0 + r[7] * p1 + r[8] * p2;
    }
}

void binomial_kernel(int width, double* k) {
    if (width == 3) { k[0] = 0.25; k[1] = 0.5; k[2] = 0.25; }
    else { k[0] = 1.0 / 16; k[1] = 4.0 / 16; k[2] = 6.0 / 16; k[3] = 4.0 / 16; k[4] = 1.0 / 16; }
}

// Separable binomial blur with edge-clamped taps; transpose=true runs the
// adjoint (scatter with the same clamped tap pattern, passes reversed).
Image blur_apply(const Image& in, int width, bool transpose) {
    double k[5];
    binomial_kernel(width, k);
    const int r = width / 2;
    const size_t n = size_t(in.h) * in.w;
    Image tmp = in, out = in;
    // Pass order does not matter for the forward (separable), but the adjoint
    // of (vertical . horizontal) is (horizontal^T . vertical^T); both passes
    // are self-transposing only away from edges, so run explicit scatter.
    auto horiz = [&](const Image& src, Image& dst) {
        std::fill(dst.v.begin(), dst.v.end(), 0.0);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x) {
                    const size_t di = size_t(c) * n + size_t(y) * in.w + x;
                    for (int t = -r; t <= r; ++t) {
                        const int xx = std::clamp(x + t, 0, in.w - 1);
                        const size_t si = size_t(c) * n + size_t(y) * in.w + xx;
                        if (transpose)
                            dst.v[si] += k[t + r] * src.v[di];
                        else
                            dst.v[di] += k[t + r] * src.v[si];
                    }
                }
    };
    auto vert = [&](const Image& src, Image& dst) {
        std::fill(dst.v.begin(), dst.v.end(), 0.0);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x) {
                    const size_t di = size_t(c) * n + size_t(y) * in.w + x;
                    for (int t = -r; t <= r; ++t) {
                        const int yy = std::clamp(y + t, 0, in.h - 1);
                        const size_t si = size_t(c) * n + size_t(yy) * in.w + x;
                        if (transpose)
                            dst.v[si] += k[t + r] * src.v[di];
                        else
                            dst.v[di] += k[t + r] * src.v[si];
                    }
                }
    };
    if (transpose) {
        vert(in, tmp);
        horiz(tmp, out);
    } else {
        horiz(in, tmp);
        vert(tmp, out);
    }
    return out;
}

void low_res_dims(const Image& img, double scale, int& lh, int& lw) {
    lh = std::max(1, int(std::lround(img.h * scale)));
    lw = std::max(1, int(std::lround(img.w * scale)));
}

// Deterministic per-pixel Gaussian field for the noise stage, plane order.
Image noise_field(int h, int w, double sigma, uint64_t seed) {
    Image f;
    f.h = h;
    f.w = w;
    f.v.resize(size_t(3) * h * w);
    Rng rng(seed);
    for (double& p : f.v) p = rng.normal(0.0, sigma);
    return f;
}

} // namespace

bool TransformSpec::is_geometric_identity() const {
    if (rotation_deg != 0.0) return false;
    for (double d : perspective)
        if (d != 0.0) return false;
    return true;
}

void TransformRanges::validate() const {
    auto ordered = [](double lo, double hi, const char* name) {
        if (!(lo <= hi)) throw InvalidInput(std::string("transform range inverted: ") + name);
    };
    ordered(rotation_lo, rotation_hi, "rotation");
    ordered(perspective_lo, perspective_hi, "perspective");
    ordered(brightness_lo, brightness_hi, "brightness");
    ordered(contrast_lo, contrast_hi, "contrast");
    ordered(saturation_lo, saturation_hi, "saturation");
    ordered(hue_lo, hue_hi, "hue");
    ordered(noise_sigma_lo, noise_sigma_hi, "noise_sigma");
    ordered(resolution_lo, resolution_hi, "resolution");
    if (noise_sigma_lo < 0.0) throw InvalidInput("noise_sigma range must be non-negative");
    if (resolution_lo <= 0.0 || resolution_hi > 1.0)
        throw InvalidInput("resolution range must lie in (0, 1]");
    if (blur_kernels.empty()) throw InvalidInput("blur_kernels must be non-empty");
    for (int k : blur_kernels)
        if (k < 1 || k % 2 == 0 || k > 5)
            throw InvalidInput("blur kernel widths must be odd and in {1,3,5}");
}

void validate_transform_spec(const TransformSpec& t) {
    if (t.blur_kernel < 1 || t.blur_kernel % 2 == 0 || t.blur_kernel > 5)
        throw InvalidInput("blur_kernel must be odd and in {1,3,5}");
    if (!(t.resolution_scale > 0.0) || t.resolution_scale > 1.0)
        throw InvalidInput("resolution_scale must lie in (0, 1]");
    if (t.noise_sigma < 0.0) throw InvalidInput("noise_sigma must be non-negative");
}

TransformSpec sample_transform(Rng& rng, const TransformRanges& ranges) {
    ranges.validate();
    TransformSpec t;
    t.rotation_deg = rng.uniform(ranges.rotation_lo, ranges.rotation_hi);
    for (double& d : t.perspective) d = rng.uniform(ranges.perspective_lo, ranges.perspective_hi);
    t.brightness = rng.uniform(ranges.brightness_lo, ranges.brightness_hi);
    t.contrast = rng.uniform(ranges.contrast_lo, ranges.contrast_hi);
    t.saturation = rng.uniform(ranges.saturation_lo, ranges.saturation_hi);
    t.hue = rng.uniform(ranges.hue_lo, ranges.hue_hi);
    t.noise_sigma = rng.uniform(ranges.noise_sigma_lo, ranges.noise_sigma_hi);
    t.blur_kernel = ranges.blur_kernels[rng.index(ranges.blur_kernels.size())];
    t.resolution_scale = rng.uniform(ranges.resolution_lo, ranges.resolution_hi);
    t.noise_seed = rng.raw();
    return t;
}

Image resize_bilinear(const Image& img, int oh, int ow) {
    if (oh < 1 || ow < 1) throw InvalidInput("resize target must be at least 1x1");
    if (oh == img.h && ow == img.w) return img;
    Image out;
    out.h = oh;
    out.w = ow;
    out.v.assign(size_t(3) * oh * ow, 0.0);
    const double ry = double(img.h) / oh, rx = double(img.w) / ow;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> src_plane(img.v.begin() + size_t(c) * img.h * img.w,
                                      img.v.begin() + size_t(c + 1) * img.h * img.w);
        std::vector<double> dst_plane(size_t(oh) * ow, 0.0);
        for (int y = 0; y < oh; ++y) {
            const double sy = (y + 0.5) * ry - 0.5;
            for (int x = 0; x < ow; ++x) {
                const double sx = (x + 0.5) * rx - 0.5;
                bilinear_tap<false>(dst_plane, src_plane, img.h, img.w, y, x, ow, sx, sy);
            }
        }
        std::copy(dst_plane.begin(), dst_plane.end(), out.v.begin() + size_t(c) * oh * ow);
    }
    return out;
}

Image resize_bilinear_grad(const Image& grad_out, int ih, int iw) {
    if (ih == grad_out.h && iw == grad_out.w) return grad_out;
    Image out;
    out.h = ih;
    out.w = iw;
    out.v.assign(size_t(3) * ih * iw, 0.0);
    const double ry = double(ih) / grad_out.h, rx = double(iw) / grad_out.w;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> g_plane(grad_out.v.begin() + size_t(c) * grad_out.h * grad_out.w,
                                    grad_out.v.begin() + size_t(c + 1) * grad_out.h * grad_out.w);
        std::vector<double> acc_plane(size_t(ih) * iw, 0.0);
        for (int y = 0; y < grad_out.h; ++y) {
            const double sy = (y + 0.5) * ry - 0.5;
            for (int x = 0; x < grad_out.w; ++x) {
                const double sx = (x + 0.5) * rx - 0.5;
                bilinear_tap<true>(acc_plane, g_plane, ih, iw, y, x, grad_out.w, sx, sy);
            }
        }
        std::copy(acc_plane.begin(), acc_plane.end(), out.v.begin() + size_t(c) * ih * iw);
    }
    return out;
}

Image apply_transform(const Image& x, const TransformSpec& t) {
    validate_transform_spec(t);
    Image cur = x;
    if (!t.is_geometric_identity()) {
        const Mat3 inv = geometric_inverse_map(t, x.h, x.w);
        cur = warp_planes(cur, inv, x.h, x.w, false, x.h, x.w);
    }
    if (t.brightness != 0.0)
        for (double& p : cur.v) p += t.brightness;
    if (t.contrast != 1.0)
        for (double& p : cur.v) p = (p - 0.5) * t.contrast + 0.5;
    if (t.saturation != 1.0) {
        const size_t n = size_t(cur.h) * cur.w;
        for (size_t i = 0; i < n; ++i) {
            const double gray =
                kLuma[0] * cur.v[i] + kLuma[1] * cur.v[n + i] + kLuma[2] * cur.v[2 * n + i];
            for (int c = 0; c < 3; ++c) {
                double& p = cur.v[size_t(c) * n + i];
                p = t.saturation * p + (1.0 - t.saturation) * gray;
            }
        }
    }
    if (t.hue != 0.0) {
        double r[9];
        hue_matrix(t.hue, r);
        mix_channels(cur, r);
    }
    if (t.noise_sigma > 0.0) {
        const Image f = noise_field(cur.h, cur.w, t.noise_sigma, t.noise_seed);
        for (size_t i = 0; i < cur.v.size(); ++i) cur.v[i] += f.v[i];
    }
    if (t.blur_kernel > 1) cur = blur_apply(cur, t.blur_kernel, false);
    if (t.resolution_scale < 1.0) {
        int lh, lw;
        low_res_dims(cur, t.resolution_scale, lh, lw);
        cur = resize_bilinear(resize_bilinear(cur, lh, lw), x.h, x.w);
    }
    for (double& p : cur.v) p = clamp01(p);
    return cur;
}

Image transform_input_grad(const Image& grad_out, const Image& output, const TransformSpec& t) {
    validate_transform_spec(t);
    if (!grad_out.same_shape(output))
        throw InvalidInput("transform gradient shape mismatch");
    Image g = grad_out;
    // Clip gate: gradient flows only where the clipped output sits strictly
    // inside (0,1).
    for (size_t i = 0; i < g.v.size(); ++i)
        if (output.v[i] <= 0.0 || output.v[i] >= 1.0) g.v[i] = 0.0;
    if (t.resolution_scale < 1.0) {
        int lh, lw;
        low_res_dims(output, t.resolution_scale, lh, lw);
        g = resize_bilinear_grad(resize_bilinear_grad(g, lh, lw), output.h, output.w);
    }
    if (t.blur_kernel > 1) g = blur_apply(g, t.blur_kernel, true);
    // Additive noise: identity gradient.
    if (t.hue != 0.0) {
        double r[9], rt[9];
        hue_matrix(t.hue, r);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rt[i * 3 + j] = r[j * 3 + i];
        mix_channels(g, rt);
    }
    if (t.saturation != 1.0) {
        const size_t n = size_t(g.h) * g.w;
        for (size_t i = 0; i < n; ++i) {
            const double gsum = g.v[i] + g.v[n + i] + g.v[2 * n + i];
            for (int c = 0; c < 3; ++c) {
                double& p = g.v[size_t(c) * n + i];
                p = t.saturation * p + (1.0 - t.saturation) * kLuma[c] * gsum;
            }
        }
    }
    if (t.contrast != 1.0)
        for (double& p : g.v) p *= t.contrast;
    // Brightness: identity gradient.
    if (!t.is_geometric_identity()) {
        const Mat3 inv = geometric_inverse_map(t, output.h, output.w);
        g = warp_planes(g, inv, output.h, output.w, true, output.h, output.w);
    }
    return g;
}

} // namespace advforge::imaging
