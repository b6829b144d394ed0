#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "convspect/tensor.hpp"

namespace convspect {

/// Multi-channel convolution kernel, weights indexed (out, in, dy, dx).
/// Anchoring convention: weight (o, c, 0, 0) multiplies the input pixel at
/// the output's own coordinate; offsets increase rightward/downward and wrap
/// mod N at application time.
struct ConvKernel {
    int out_channels = 0;
    int in_channels = 0;
    int k_h = 0;
    int k_w = 0;
    std::vector<double> w; // out_channels * in_channels * k_h * k_w

    ConvKernel() = default;
    ConvKernel(int out_c, int in_c, int kh, int kw)
        : out_channels(out_c), in_channels(in_c), k_h(kh), k_w(kw),
          w(static_cast<size_t>(out_c) * in_c * kh * kw, 0.0) {
        if (out_c < 1 || in_c < 1 || kh < 1 || kw < 1)
            throw ContractError("ConvKernel: all dimensions must be >= 1");
    }

    double& at(int o, int c, int dy, int dx) {
        return w[((static_cast<size_t>(o) * in_channels + c) * k_h + dy) * k_w + dx];
    }
    double at(int o, int c, int dy, int dx) const {
        return w[((static_cast<size_t>(o) * in_channels + c) * k_h + dy) * k_w + dx];
    }
};

/// Circular ("wraps around") convolution layer: kernel, stride, optional
/// per-output-channel normalization scale (the test-time multiplicative part
/// of batch-norm / weight-norm).
struct ConvLayer {
    ConvKernel kernel;
    int stride = 1;
    std::optional<std::vector<double>> norm_scale; // size out_channels when present
};

/// Ordered conv layers, applied front to back, plus an optional whole-stack
/// identity skip. Skip requires first-layer in_channels == last-layer
/// out_channels and all strides 1.
struct NetworkSpec {
    std::vector<ConvLayer> layers;
    bool skip = false;
};

/// Validates a layer against grid size n (kernel fits, stride divides n,
/// norm length matches). Throws ContractError on violation.
void validate_layer(const ConvLayer& layer, int n);

/// Validates the channel chain and (if skip) the skip preconditions.
void validate_network(const NetworkSpec& net);

/// Applies one circular conv layer. Output has kernel.out_channels channels
/// and size n / stride. Stride s > 1 is stride-1 convolution followed by
/// sampling at coordinates == 0 (mod s); requires n % s == 0.
RealTensor apply_conv(const ConvLayer& layer, const RealTensor& x);

/// Dense matrix of the layer on the n-grid, shape
/// (out_channels * (n/s)^2) x (in_channels * n^2), with vec ordering
/// channel-major then row-major: index(c, y, x) = c*n^2 + y*n + x.
Eigen::MatrixXd materialize_dense(const ConvLayer& layer, int n);

/// Absorbs the normalization scale into the kernel weights; the returned
/// layer has no norm field and identical action. Zero or non-finite scales
/// are degenerate and rejected.
ConvLayer fold_normalization(const ConvLayer& layer);

/// Applies the stack in order; adds the input afterwards when skip is set.
RealTensor apply_network(const NetworkSpec& net, const RealTensor& x);

} // namespace convspect
