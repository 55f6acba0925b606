#include "advforge/net.hpp"

#include <cmath>
#include <cstring>

#include "advforge/common.hpp"

namespace advforge::nn {

namespace {

// col matrix layout: [in_c*k*k rows, out_h*out_w columns], row-major.
void im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow,
            std::vector<double>& col) {
    const size_t pixels = size_t(oh) * ow;
    col.assign(size_t(x.c) * k * k * pixels, 0.0);
    for (int c = 0; c < x.c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                double* row = col.data() + ((size_t(c) * k + ky) * k + kx) * pixels;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= x.h) continue;
                    const double* src = &x.v[(size_t(c) * x.h + iy) * x.w];
                    double* dst = row + size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < x.w) dst[ox] = src[ix];
                    }
                }
            }
}

// Transpose of im2col: scatters col entries back into an input-shaped tensor.
void col2im(const std::vector<double>& col, int in_c, int in_h, int in_w, int k, int stride,
            int pad, int oh, int ow, Tensor& out) {
    out = Tensor(in_c, in_h, in_w, 0.0);
    const size_t pixels = size_t(oh) * ow;
    for (int c = 0; c < in_c; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const double* row = col.data() + ((size_t(c) * k + ky) * k + kx) * pixels;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= in_h) continue;
                    double* dst = &out.v[(size_t(c) * in_h + iy) * in_w];
                    const double* src = row + size_t(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < in_w) dst[ix] += src[ox];
                    }
                }
            }
}

} // namespace

void Conv::init(Rng& rng, double bias_fill) {
    const double stddev = std::sqrt(2.0 / (double(in_c) * k * k));
    for (double& w : weight) w = rng.normal(0.0, stddev);
    for (double& b : bias) b = bias_fill;
}

Tensor Conv::forward(const Tensor& x) const {
    if (x.c != in_c) throw InvalidInput("conv input channel mismatch");
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    if (oh < 1 || ow < 1) throw InvalidInput("conv input too small");
    std::vector<double> col;
    im2col(x, k, stride, pad, oh, ow, col);
    const size_t pixels = size_t(oh) * ow;
    const size_t features = size_t(in_c) * k * k;
    Tensor out(out_c, oh, ow);
    for (int oc = 0; oc < out_c; ++oc) {
        double* dst = out.v.data() + size_t(oc) * pixels;
        std::fill(dst, dst + pixels, bias[oc]);
        const double* wrow = weight.data() + size_t(oc) * features;
        for (size_t f = 0; f < features; ++f) {
            const double wv = wrow[f];
            if (wv == 0.0) continue;
            const double* src = col.data() + f * pixels;
            for (size_t p = 0; p < pixels; ++p) dst[p] += wv * src[p];
        }
    }
    return out;
}

Tensor Conv::backward_input(const Tensor& grad_out, int in_h, int in_w) const {
    if (grad_out.c != out_c) throw InvalidInput("conv grad channel mismatch");
    const int oh = grad_out.h, ow = grad_out.w;
    const size_t pixels = size_t(oh) * ow;
    const size_t features = size_t(in_c) * k * k;
    // col_grad = W^T * grad_out
    std::vector<double> col_grad(features * pixels, 0.0);
    for (int oc = 0; oc < out_c; ++oc) {
        const double* g = grad_out.v.data() + size_t(oc) * pixels;
        const double* wrow = weight.data() + size_t(oc) * features;
        for (size_t f = 0; f < features; ++f) {
            const double wv = wrow[f];
            if (wv == 0.0) continue;
            double* dst = col_grad.data() + f * pixels;
            for (size_t p = 0; p < pixels; ++p) dst[p] += wv * g[p];
        }
    }
    Tensor out;
    col2im(col_grad, in_c, in_h, in_w, k, stride, pad, oh, ow, out);
    return out;
}

void Conv::accumulate_param_grad(const Tensor& x, const Tensor& grad_out,
                                 std::vector<double>& gw, std::vector<double>& gb) const {
    const int oh = grad_out.h, ow = grad_out.w;
    const size_t pixels = size_t(oh) * ow;
    const size_t features = size_t(in_c) * k * k;
    std::vector<double> col;
    im2col(x, k, stride, pad, oh, ow, col);
    // gW += grad_out * col^T, gb += row sums of grad_out.
    for (int oc = 0; oc < out_c; ++oc) {
        const double* g = grad_out.v.data() + size_t(oc) * pixels;
        double bsum = 0.0;
        for (size_t p = 0; p < pixels; ++p) bsum += g[p];
        gb[oc] += bsum;
        double* wrow = gw.data() + size_t(oc) * features;
        for (size_t f = 0; f < features; ++f) {
            const double* src = col.data() + f * pixels;
            double s = 0.0;
            for (size_t p = 0; p < pixels; ++p) s += g[p] * src[p];
            wrow[f] += s;
        }
    }
}

Tensor leaky_relu(const Tensor& x, double slope) {
    Tensor out = x;
    for (double& v : out.v)
        if (v < 0.0) v *= slope;
    return out;
}

Tensor leaky_relu_grad(const Tensor& grad_out, const Tensor& pre, double slope) {
    Tensor out = grad_out;
    for (size_t i = 0; i < out.v.size(); ++i)
        if (pre.v[i] < 0.0) out.v[i] *= slope;
    return out;
}

} // namespace advforge::nn
