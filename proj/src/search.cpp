#include "convspect/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convspect/rng.hpp"
#include "convspect/spectra.hpp"

namespace convspect {

namespace {

Perturbation make_pattern(int n, const Frequency& f, double epsilon, bool is_signed) {
    return is_signed ? ssfa_pattern(n, f, epsilon) : sfa_pattern(n, f, epsilon);
}

// Canonical representatives of the conjugate classes, row-major order.
std::vector<Frequency> conjugate_classes(int n) {
    std::vector<Frequency> reps;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Frequency f{i, j, n};
            if (f.canonical() == f) reps.push_back(f);
        }
    }
    return reps;
}

} // namespace

FoolHeatmap fool_heatmap(Oracle& oracle, const std::vector<RealTensor>& batch, int n,
                         double epsilon, bool is_signed, std::uint64_t batch_seed) {
    if (batch.empty()) throw ContractError("fool_heatmap: batch must be nonempty");
    if (n < 1) throw ContractError("fool_heatmap: n must be >= 1");
    for (const auto& x : batch)
        if (x.n != n) throw ContractError("fool_heatmap: batch image size != n");

    FoolHeatmap hm;
    hm.n = n;
    hm.epsilon = epsilon;
    hm.is_signed = is_signed;
    hm.seed = batch_seed;
    hm.batch_size = static_cast<int>(batch.size());
    hm.oracle_desc = oracle.descriptor();
    hm.values = Eigen::MatrixXd::Zero(n, n);

    const std::vector<Label> clean = clean_labels(oracle, batch);
    for (const Frequency& f : conjugate_classes(n)) {
        double ratio = 0.0;
        try {
            ratio = fool_ratio_cached(oracle, batch, clean, make_pattern(n, f, epsilon, is_signed));
        } catch (OracleError& e) {
            e.add_context("frequency (" + std::to_string(f.i) + "," + std::to_string(f.j) + ")");
            throw;
        }
        hm.values(f.i, f.j) = ratio;
        const Frequency c = f.conjugate();
        hm.values(c.i, c.j) = ratio;
    }
    return hm;
}

std::pair<Frequency, double> brute_force_search(Oracle& oracle,
                                                const std::vector<RealTensor>& batch, int n,
                                                double epsilon, bool is_signed) {
    const FoolHeatmap hm = fool_heatmap(oracle, batch, n, epsilon, is_signed);
    Frequency best{0, 0, n};
    double best_val = hm.values(0, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (hm.values(i, j) > best_val) {
                best = {i, j, n};
                best_val = hm.values(i, j);
            }
    return {best, best_val};
}

SearchResult local_search(Oracle& oracle, const std::vector<RealTensor>& batch, int n,
                          double epsilon, std::uint64_t budget, std::uint64_t seed,
                          bool is_signed) {
    if (batch.empty()) throw ContractError("local_search: batch must be nonempty");
    if (budget < 1) throw ContractError("local_search: budget must allow >= 1 evaluation");
    for (const auto& x : batch)
        if (x.n != n) throw ContractError("local_search: batch image size != n");

    const std::vector<Label> clean = clean_labels(oracle, batch);
    std::uint64_t queries = static_cast<std::uint64_t>(batch.size());
    std::uint64_t evals = 0;

    // cache over canonical cells, -1 = unevaluated
    Eigen::MatrixXd cache = Eigen::MatrixXd::Constant(n, n, -1.0);
    const std::vector<Frequency> classes = conjugate_classes(n);

    SearchResult best;
    best.freq = Frequency{0, 0, n};
    best.ratio = -1.0;

    auto evaluate = [&](const Frequency& f) -> double {
        const Frequency c = f.canonical();
        if (cache(c.i, c.j) >= 0.0) return cache(c.i, c.j);
        if (evals >= budget) return -1.0; // signals exhaustion; caller checks budget first
        double ratio = 0.0;
        try {
            ratio = fool_ratio_cached(oracle, batch, clean, make_pattern(n, c, epsilon, is_signed));
        } catch (OracleError& e) {
            e.add_context("frequency (" + std::to_string(c.i) + "," + std::to_string(c.j) + ")");
            throw;
        }
        ++evals;
        queries += static_cast<std::uint64_t>(batch.size());
        cache(c.i, c.j) = ratio;
        if (ratio > best.ratio ||
            (ratio == best.ratio && (c.i < best.freq.i || (c.i == best.freq.i && c.j < best.freq.j)))) {
            best.freq = c;
            best.ratio = ratio;
        }
        return ratio;
    };

    Rng rng(seed);
    while (evals < budget) {
        // restart: pick a random unevaluated class
        std::vector<const Frequency*> fresh;
        fresh.reserve(classes.size());
        for (const auto& f : classes)
            if (cache(f.i, f.j) < 0.0) fresh.push_back(&f);
        if (fresh.empty()) break; // full coverage
        Frequency cur = *fresh[rng.uniform_index(fresh.size())];
        double cur_val = evaluate(cur);

        // steepest-ascent hill climb over the 8-neighborhood on the torus
        bool improved = true;
        while (improved && evals < budget) {
            improved = false;
            Frequency step = cur;
            double step_val = cur_val;
            for (int di = -1; di <= 1; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (evals >= budget) break;
                    const Frequency nb =
                        Frequency{(cur.i + di + n) % n, (cur.j + dj + n) % n, n}.canonical();
                    const double val = evaluate(nb);
                    if (val < 0.0) continue; // budget exhausted inside evaluate
                    if (val > step_val ||
                        (val == step_val && val > cur_val &&
                         (nb.i < step.i || (nb.i == step.i && nb.j < step.j)))) {
                        step = nb;
                        step_val = val;
                    }
                }
            }
            if (step_val > cur_val) {
                cur = step;
                cur_val = step_val;
                improved = true;
            }
        }
    }

    best.evaluations = evals;
    best.oracle_queries = queries;
    return best;
}

ResponseMap kernel_response_map(const ConvKernel& kernel, int n) {
    if (kernel.k_h > n || kernel.k_w > n) throw ContractError("kernel_response_map: kernel exceeds grid");
    ConvLayer layer;
    layer.kernel = kernel;
    layer.stride = 1;

    ResponseMap map;
    map.n = n;
    {
        std::ostringstream os;
        os << kernel.out_channels << "x" << kernel.in_channels << "x" << kernel.k_h << "x"
           << kernel.k_w;
        map.kernel_desc = os.str();
    }
    map.values = Eigen::MatrixXd::Zero(n, n);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const ComplexGrid b = fourier_basis(n, {i, j, n});
            double acc = 0.0;
            // complex basis fed on each input channel in turn; the layer is
            // real-linear, so the complex response is conv(Re) + i*conv(Im)
            for (int c = 0; c < kernel.in_channels; ++c) {
                RealTensor re(kernel.in_channels, n), im(kernel.in_channels, n);
                for (int y = 0; y < n; ++y) {
                    for (int x = 0; x < n; ++x) {
                        re.at(c, y, x) = b(y, x).real();
                        im.at(c, y, x) = b(y, x).imag();
                    }
                }
                const RealTensor out_re = apply_conv(layer, re);
                const RealTensor out_im = apply_conv(layer, im);
                for (double v : out_re.v) acc += v * v;
                for (double v : out_im.v) acc += v * v;
            }
            map.values(i, j) = std::sqrt(acc);
        }
    }
    return map;
}

ConvKernel matched_kernel(const Frequency& freq, int k, int n) {
    if (!freq.valid() || freq.n != n) throw ContractError("matched_kernel: invalid frequency");
    if (k < 1 || k > n) throw ContractError("matched_kernel: need 1 <= k <= n");
    ConvKernel kernel(1, 1, k, k);
    double norm2 = 0.0;
    for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
            const long long ph =
                (static_cast<long long>(freq.i) * dy + static_cast<long long>(freq.j) * dx) % n;
            const double w = std::cos(2.0 * M_PI * static_cast<double>(ph) / n);
            kernel.at(0, 0, dy, dx) = w;
            norm2 += w * w;
        }
    }
    const double norm = std::sqrt(norm2);
    if (norm < 1e-300) throw ContractError("matched_kernel: degenerate projection");
    for (double& w : kernel.w) w /= norm;
    return kernel;
}

Eigen::MatrixXd pixel_heatmap(Oracle& oracle, const std::vector<RealTensor>& batch, double amount) {
    if (batch.empty()) throw ContractError("pixel_heatmap: batch must be nonempty");
    const int n = batch.front().n;
    const std::vector<Label> clean = clean_labels(oracle, batch);
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            int changed = 0;
            for (size_t idx = 0; idx < batch.size(); ++idx) {
                RealTensor perturbed = batch[idx];
                for (int c = 0; c < perturbed.channels; ++c)
                    perturbed.at(c, y, x) = std::clamp(perturbed.at(c, y, x) + amount, 0.0, 1.0);
                try {
                    if (oracle.query(perturbed) != clean[idx]) ++changed;
                } catch (OracleError& e) {
                    e.add_context("pixel (" + std::to_string(y) + "," + std::to_string(x) +
                                  ") image " + std::to_string(idx));
                    throw;
                }
            }
            values(y, x) = static_cast<double>(changed) / static_cast<double>(batch.size());
        }
    }
    return values;
}

} // namespace convspect
