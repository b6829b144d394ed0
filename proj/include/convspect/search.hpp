#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "convspect/conv.hpp"
#include "convspect/oracle.hpp"

namespace convspect {

/// Fool ratio per frequency on a fixed batch, with enough provenance to
/// reproduce the grid bit-exactly.
struct FoolHeatmap {
    int n = 0;
    double epsilon = 0.0;
    bool is_signed = false;
    std::uint64_t seed = 0;   // batch seed (provenance)
    int batch_size = 0;
    std::string oracle_desc;
    Eigen::MatrixXd values; // n x n, entry (i, j) in [0, 1]
};

/// Evaluates the (S)SFA pattern of every frequency on the batch. Clean
/// labels are computed once and reused; conjugate frequency pairs share one
/// evaluation whose value is written to both cells, so
/// values(i, j) == values(n-i, n-j) holds exactly and the perturbed-query
/// cost is |batch| * (number of conjugate classes) instead of |batch| * n^2.
/// Oracle failures abort with frequency and image-index context.
FoolHeatmap fool_heatmap(Oracle& oracle, const std::vector<RealTensor>& batch, int n,
                         double epsilon, bool is_signed, std::uint64_t batch_seed = 0);

/// Argmax cell of the heatmap; ties broken by smallest (i, then j).
std::pair<Frequency, double> brute_force_search(Oracle& oracle,
                                                const std::vector<RealTensor>& batch, int n,
                                                double epsilon, bool is_signed = false);

struct SearchResult {
    Frequency freq;
    double ratio = 0.0;
    std::uint64_t evaluations = 0;   // frequency evaluations spent (<= budget)
    std::uint64_t oracle_queries = 0; // total oracle queries consumed
};

/// Budgeted black-box frequency search: deterministic multi-restart hill
/// climbing on the torus of conjugate-deduplicated frequency classes with
/// 8-neighborhoods and steepest ascent. Each frequency class is evaluated at
/// most once (|batch| queries); cached revisits are free. `budget` counts
/// frequency evaluations; with budget >= the class count the result equals
/// brute_force_search.
SearchResult local_search(Oracle& oracle, const std::vector<RealTensor>& batch, int n,
                          double epsilon, std::uint64_t budget, std::uint64_t seed,
                          bool is_signed = false);

/// Per-input-frequency output magnitude of one stride-1 conv layer:
/// value(i, j) = l2 norm of the layer applied to the (complex) basis element
/// at (i, j), computed by applying the layer to the real and imaginary parts
/// per input channel and combining. Equals the Frobenius norm of the
/// frequency block at (i, j).
struct ResponseMap {
    int n = 0;
    std::string kernel_desc;
    Eigen::MatrixXd values; // n x n, nonnegative
};

ResponseMap kernel_response_map(const ConvKernel& kernel, int n);

/// Unit-Frobenius-norm k x k kernel maximizing the response at `freq`:
/// the real projection of the conjugate basis element restricted to the
/// k x k support, normalized. Its response map attains its maximum at freq
/// or its conjugate.
ConvKernel matched_kernel(const Frequency& freq, int k, int n);

/// Standard-basis analogue of the heatmap: value(y, x) is the fool ratio
/// when `amount` is added to pixel (y, x) of every channel and the result is
/// clipped to [0, 1]. Experiment harness for the pixel-vs-Fourier contrast.
Eigen::MatrixXd pixel_heatmap(Oracle& oracle, const std::vector<RealTensor>& batch,
                              double amount = 1.0);

} // namespace convspect
