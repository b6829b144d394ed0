#pragma once

#include <cmath>
#include <vector>

#include "convspect/errors.hpp"

namespace convspect {

/// Real C x N x N tensor, channel-major then row-major. The carrier type for
/// images (values in [0,1]) and perturbation patterns (values in [-eps, eps]).
struct RealTensor {
    int channels = 0;
    int n = 0;
    std::vector<double> v; // size channels * n * n

    RealTensor() = default;
    RealTensor(int channels_, int n_)
        : channels(channels_), n(n_), v(static_cast<size_t>(channels_) * n_ * n_, 0.0) {
        if (channels_ < 1 || n_ < 1) throw ContractError("RealTensor: channels and n must be >= 1");
    }

    double& at(int c, int y, int x) { return v[(static_cast<size_t>(c) * n + y) * n + x]; }
    double at(int c, int y, int x) const { return v[(static_cast<size_t>(c) * n + y) * n + x]; }

    size_t size() const { return v.size(); }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    bool in_unit_range() const {
        for (double x : v)
            if (x < 0.0 || x > 1.0) return false;
        return true;
    }
};

} // namespace convspect
