#pragma once

#include <cmath>
#include <vector>

#include "advforge/image.hpp"
#include "advforge/rng.hpp"

namespace advforge::nn {

// Planar CHW activation tensor.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, double fill = 0.0)
        : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, fill) {}

    double& at(int ch, int y, int x) { return v[(size_t(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return v[(size_t(ch) * h + y) * w + x]; }
    size_t size() const { return v.size(); }
};

inline Tensor tensor_from_image(const imaging::Image& img) {
    Tensor t;
    t.c = 3;
    t.h = img.h;
    t.w = img.w;
    t.v = img.v;
    return t;
}

inline imaging::Image image_from_tensor(const Tensor& t) {
    imaging::Image img;
    img.h = t.h;
    img.w = t.w;
    img.v = t.v;
    return img;
}

// Convolution layer (square kernel, zero padding), im2col + GEMM inside.
struct Conv {
    int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 1;
    std::vector<double> weight; // out_c * in_c * k * k
    std::vector<double> bias;   // out_c

    Conv() = default;
    Conv(int in_c_, int out_c_, int k_, int stride_, int pad_)
        : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_),
          weight(size_t(out_c_) * in_c_ * k_ * k_, 0.0), bias(out_c_, 0.0) {}

    int out_dim(int in_dim) const { return (in_dim + 2 * pad - k) / stride + 1; }
    size_t param_count() const { return weight.size() + bias.size(); }

    // He-normal weights, zero (or given) biases.
    void init(Rng& rng, double bias_fill = 0.0);

    Tensor forward(const Tensor& x) const;
    // Gradient with respect to the layer input of the given spatial size.
    Tensor backward_input(const Tensor& grad_out, int in_h, int in_w) const;
    // Adds this layer's parameter gradients into gw / gb (same layouts as
    // weight / bias).
    void accumulate_param_grad(const Tensor& x, const Tensor& grad_out,
                               std::vector<double>& gw, std::vector<double>& gb) const;
};

Tensor leaky_relu(const Tensor& x, double slope = 0.1);
// `pre` is the layer's pre-activation input.
Tensor leaky_relu_grad(const Tensor& grad_out, const Tensor& pre, double slope = 0.1);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace advforge::nn
