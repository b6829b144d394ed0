#include "convspect/conv.hpp"

#include <cmath>
#include <string>

namespace convspect {

void validate_layer(const ConvLayer& layer, int n) {
    const ConvKernel& k = layer.kernel;
    if (k.out_channels < 1 || k.in_channels < 1 || k.k_h < 1 || k.k_w < 1)
        throw ContractError("conv: empty kernel");
    if (k.k_h > n || k.k_w > n)
        throw ContractError("conv: kernel " + std::to_string(k.k_h) + "x" + std::to_string(k.k_w) +
                            " does not fit grid n=" + std::to_string(n));
    if (layer.stride < 1) throw ContractError("conv: stride must be >= 1");
    if (layer.stride > 1 && n % layer.stride != 0)
        throw ContractError("conv: stride " + std::to_string(layer.stride) +
                            " requires n == 0 (mod s), got n=" + std::to_string(n));
    for (double wv : k.w)
        if (!std::isfinite(wv)) throw ContractError("conv: non-finite kernel weight");
    if (layer.norm_scale) {
        if (static_cast<int>(layer.norm_scale->size()) != k.out_channels)
            throw ContractError("conv: norm scale length must equal out_channels");
        for (double g : *layer.norm_scale)
            if (!std::isfinite(g)) throw ContractError("conv: non-finite norm scale");
    }
}

void validate_network(const NetworkSpec& net) {
    if (net.layers.empty()) throw ContractError("network: at least one layer required");
    for (size_t t = 1; t < net.layers.size(); ++t) {
        if (net.layers[t].kernel.in_channels != net.layers[t - 1].kernel.out_channels)
            throw ContractError("network: channel chain mismatch at layer " + std::to_string(t));
    }
    if (net.skip) {
        if (net.layers.front().kernel.in_channels != net.layers.back().kernel.out_channels)
            throw ContractError("network: skip requires in_channels(first) == out_channels(last)");
        for (const auto& l : net.layers)
            if (l.stride != 1) throw ContractError("network: skip requires all strides 1");
    }
}

RealTensor apply_conv(const ConvLayer& layer, const RealTensor& x) {
    const ConvKernel& k = layer.kernel;
    if (x.channels != k.in_channels)
        throw ContractError("apply_conv: input has " + std::to_string(x.channels) +
                            " channels, kernel expects " + std::to_string(k.in_channels));
    validate_layer(layer, x.n);

    const int n = x.n;
    const int s = layer.stride;
    const int n_out = n / s;
    RealTensor out(k.out_channels, n_out);
    for (int o = 0; o < k.out_channels; ++o) {
        const double gamma = layer.norm_scale ? (*layer.norm_scale)[o] : 1.0;
        for (int y = 0; y < n_out; ++y) {
            for (int xo = 0; xo < n_out; ++xo) {
                double acc = 0.0;
                for (int c = 0; c < k.in_channels; ++c) {
                    for (int dy = 0; dy < k.k_h; ++dy) {
                        const int yy = (y * s + dy) % n;
                        for (int dx = 0; dx < k.k_w; ++dx) {
                            const int xx = (xo * s + dx) % n;
                            acc += k.at(o, c, dy, dx) * x.at(c, yy, xx);
                        }
                    }
                }
                out.at(o, y, xo) = gamma * acc;
            }
        }
    }
    return out;
}

Eigen::MatrixXd materialize_dense(const ConvLayer& layer, int n) {
    const ConvKernel& k = layer.kernel;
    validate_layer(layer, n);
    const int s = layer.stride;
    const int n_out = n / s;
    const Eigen::Index rows = static_cast<Eigen::Index>(k.out_channels) * n_out * n_out;
    const Eigen::Index cols = static_cast<Eigen::Index>(k.in_channels) * n * n;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
    for (int o = 0; o < k.out_channels; ++o) {
        const double gamma = layer.norm_scale ? (*layer.norm_scale)[o] : 1.0;
        for (int y = 0; y < n_out; ++y) {
            for (int x = 0; x < n_out; ++x) {
                const Eigen::Index row = (static_cast<Eigen::Index>(o) * n_out + y) * n_out + x;
                for (int c = 0; c < k.in_channels; ++c) {
                    for (int dy = 0; dy < k.k_h; ++dy) {
                        const int yy = (y * s + dy) % n;
                        for (int dx = 0; dx < k.k_w; ++dx) {
                            const int xx = (x * s + dx) % n;
                            const Eigen::Index col = (static_cast<Eigen::Index>(c) * n + yy) * n + xx;
                            m(row, col) += gamma * k.at(o, c, dy, dx);
                        }
                    }
                }
            }
        }
    }
    return m;
}

ConvLayer fold_normalization(const ConvLayer& layer) {
    if (!layer.norm_scale) return layer;
    const ConvKernel& k = layer.kernel;
    if (static_cast<int>(layer.norm_scale->size()) != k.out_channels)
        throw ContractError("fold_normalization: norm scale length must equal out_channels");
    for (double g : *layer.norm_scale)
        if (!std::isfinite(g) || g == 0.0)
            throw ContractError("fold_normalization: degenerate (zero or non-finite) scale");

    ConvLayer folded;
    folded.kernel = k;
    folded.stride = layer.stride;
    for (int o = 0; o < k.out_channels; ++o) {
        const double gamma = (*layer.norm_scale)[o];
        for (int c = 0; c < k.in_channels; ++c)
            for (int dy = 0; dy < k.k_h; ++dy)
                for (int dx = 0; dx < k.k_w; ++dx) folded.kernel.at(o, c, dy, dx) *= gamma;
    }
    return folded;
}

RealTensor apply_network(const NetworkSpec& net, const RealTensor& x) {
    validate_network(net);
    if (x.channels != net.layers.front().kernel.in_channels)
        throw ContractError("apply_network: input channel mismatch");
    RealTensor cur = x;
    for (const auto& layer : net.layers) cur = apply_conv(layer, cur);
    if (net.skip) {
        if (cur.channels != x.channels || cur.n != x.n)
            throw ContractError("apply_network: skip shape mismatch");
        for (size_t i = 0; i < cur.v.size(); ++i) cur.v[i] += x.v[i];
    }
    return cur;
}

} // namespace convspect
