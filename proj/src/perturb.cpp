#include "convspect/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace convspect {

namespace {

// raw(u, v) = 2 * (Re - Im) of the basis element at freq; exactly real.
Eigen::MatrixXd raw_sfa(int n, const Frequency& freq) {
    if (freq.n != n || !freq.valid()) throw ContractError("sfa: frequency out of range");
    Eigen::MatrixXd raw(n, n);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            const long long ph =
                (static_cast<long long>(freq.i) * u + static_cast<long long>(freq.j) * v) % n;
            const double ang = 2.0 * M_PI * static_cast<double>(ph) / n;
            raw(u, v) = 2.0 * (std::cos(ang) - std::sin(ang)) / n;
        }
    }
    return raw;
}

} // namespace

Perturbation sfa_pattern(int n, const Frequency& freq, double epsilon) {
    if (epsilon < 0.0) throw ContractError("sfa_pattern: epsilon must be >= 0");
    Eigen::MatrixXd raw = raw_sfa(n, freq);
    const double peak = raw.cwiseAbs().maxCoeff();
    if (peak < 1e-300) throw ContractError("sfa_pattern: degenerate frequency (raw pattern vanishes)");
    Perturbation p;
    p.n = n;
    p.freq = freq;
    p.epsilon = epsilon;
    p.is_signed = false;
    p.pattern = raw * (epsilon / peak);
    return p;
}

Perturbation ssfa_pattern(int n, const Frequency& freq, double epsilon) {
    if (epsilon < 0.0) throw ContractError("ssfa_pattern: epsilon must be >= 0");
    Eigen::MatrixXd raw = raw_sfa(n, freq);
    if (raw.cwiseAbs().maxCoeff() < 1e-300)
        throw ContractError("ssfa_pattern: degenerate frequency (raw pattern vanishes)");
    Perturbation p;
    p.n = n;
    p.freq = freq;
    p.epsilon = epsilon;
    p.is_signed = true;
    p.pattern = raw.unaryExpr([epsilon](double x) {
        if (x > 0.0) return epsilon;
        if (x < 0.0) return -epsilon;
        return 0.0;
    });
    return p;
}

RealTensor apply_perturbation(const RealTensor& x, const Perturbation& p) {
    if (x.n != p.n) throw ContractError("apply_perturbation: size mismatch");
    if (!x.in_unit_range()) throw ContractError("apply_perturbation: input values must lie in [0, 1]");
    RealTensor out = x;
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < x.n; ++y)
            for (int xx = 0; xx < x.n; ++xx)
                out.at(c, y, xx) = std::clamp(x.at(c, y, xx) + p.pattern(y, xx), 0.0, 1.0);
    return out;
}

std::vector<Eigen::MatrixXd> perturbation_spectrum(const RealTensor& x, bool centered) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<size_t>(x.channels));
    const int n = x.n;
    for (int c = 0; c < x.channels; ++c) {
        Eigen::MatrixXd chan(n, n);
        for (int y = 0; y < n; ++y)
            for (int xx = 0; xx < n; ++xx) chan(y, xx) = x.at(c, y, xx);
        const ComplexGrid spec = dft2(chan);
        Eigen::MatrixXd logmag(n, n);
        for (int u = 0; u < n; ++u) {
            for (int v = 0; v < n; ++v) {
                const int uu = centered ? (u + n / 2) % n : u;
                const int vv = centered ? (v + n / 2) % n : v;
                logmag(uu, vv) = std::log1p(std::abs(spec(u, v)));
            }
        }
        out.push_back(std::move(logmag));
    }
    return out;
}

} // namespace convspect
