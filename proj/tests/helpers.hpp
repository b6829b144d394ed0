#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "convspect/conv.hpp"
#include "convspect/fourier.hpp"
#include "convspect/rng.hpp"
#include "convspect/tensor.hpp"

namespace testutil {

using convspect::Complex;
using convspect::ComplexGrid;
using convspect::ConvKernel;
using convspect::ConvLayer;
using convspect::NetworkSpec;
using convspect::RealTensor;
using convspect::Rng;

inline Eigen::MatrixXd random_real_grid(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.uniform(lo, hi);
    return g;
}

inline ComplexGrid random_complex_grid(Rng& rng, int n) {
    ComplexGrid g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    return g;
}

inline RealTensor random_tensor(Rng& rng, int channels, int n, double lo = 0.0, double hi = 1.0) {
    RealTensor t(channels, n);
    for (double& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

// Independent oracle: the forward transform written as the literal double sum.
inline ComplexGrid dft2_direct(const ComplexGrid& x) {
    const int n = static_cast<int>(x.rows());
    ComplexGrid out(n, n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            Complex acc(0.0, 0.0);
            for (int m = 0; m < n; ++m)
                for (int nn = 0; nn < n; ++nn) {
                    const double ang = -2.0 * M_PI * (static_cast<double>(u) * m + static_cast<double>(v) * nn) / n;
                    acc += x(m, nn) * Complex(std::cos(ang), std::sin(ang));
                }
            out(u, v) = acc;
        }
    }
    return out;
}

inline ConvLayer random_layer(Rng& rng, int out_c, int in_c, int k, int stride = 1,
                              bool with_norm = false) {
    ConvLayer layer;
    layer.kernel = ConvKernel(out_c, in_c, k, k);
    for (double& w : layer.kernel.w) w = rng.uniform(-1.0, 1.0);
    layer.stride = stride;
    if (with_norm) {
        std::vector<double> scales(static_cast<size_t>(out_c));
        for (double& g : scales) {
            g = rng.uniform(0.2, 2.0);
            if (rng.uniform() < 0.5) g = -g;
        }
        layer.norm_scale = scales;
    }
    return layer;
}

// vec(x) in the library's channel-major row-major ordering
inline Eigen::VectorXd vec_tensor(const RealTensor& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.v.data(), static_cast<Eigen::Index>(x.v.size()));
}

inline RealTensor unvec_tensor(const Eigen::VectorXd& v, int channels, int n) {
    RealTensor t(channels, n);
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] = v(static_cast<Eigen::Index>(i));
    return t;
}

// Dense matrix of a whole stack: product of per-layer dense matrices
// (application order), plus identity when skip is set.
inline Eigen::MatrixXd dense_network(const NetworkSpec& net, int n) {
    Eigen::MatrixXd m = convspect::materialize_dense(net.layers.front(), n);
    int cur_n = n / net.layers.front().stride;
    for (size_t t = 1; t < net.layers.size(); ++t) {
        m = convspect::materialize_dense(net.layers[t], cur_n) * m;
        cur_n /= net.layers[t].stride;
    }
    if (net.skip) m += Eigen::MatrixXd::Identity(m.rows(), m.cols());
    return m;
}

// two-sided Jacobi: slower than BDC but accurate on the heavily clustered
// spectra these operators produce (BDC mislays degenerate groups)
inline std::vector<double> dense_singular_values(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    std::vector<double> s(svd.singularValues().data(),
                          svd.singularValues().data() + svd.singularValues().size());
    std::sort(s.begin(), s.end(), std::greater<double>());
    return s;
}

// Multiset comparison: sorted descending lists, top overlap must agree to
// rel_tol (abs_tol below near_zero); surplus entries in the longer list must
// be ~zero.
inline bool sigma_multisets_match(const std::vector<double>& ours, const std::vector<double>& dense,
                                  double rel_tol = 1e-8, double abs_tol = 1e-10,
                                  double near_zero = 1e-6, double* worst = nullptr) {
    const size_t common = std::min(ours.size(), dense.size());
    double w = 0.0;
    bool ok = true;
    for (size_t t = 0; t < common; ++t) {
        const double a = ours[t], b = dense[t];
        const double err = std::abs(a - b);
        if (std::max(a, b) < near_zero) {
            if (err > abs_tol) ok = false;
        } else {
            if (err / std::max(a, b) > rel_tol) ok = false;
        }
        w = std::max(w, err);
    }
    const auto& longer = ours.size() > dense.size() ? ours : dense;
    for (size_t t = common; t < longer.size(); ++t)
        if (std::abs(longer[t]) > abs_tol) ok = false;
    if (worst) *worst = w;
    return ok;
}

} // namespace testutil
