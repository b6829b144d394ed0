#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "convspect/conv.hpp"
#include "convspect/fourier.hpp"

namespace convspect {

/// The m_out x m_in channel-mixing matrix a stride-1 conv stack applies at
/// one spatial frequency. Feeding channel vector a on the basis grid of w
/// yields (block * a) on the same grid, so the block's singular values are
/// singular values of the full operator.
struct FrequencyBlock {
    Frequency freq;
    Eigen::MatrixXcd block;
};

/// Per-frequency blocks for the whole n x n grid, row-major in (i, j).
struct FrequencyBlockMap {
    int n = 0;
    std::vector<Eigen::MatrixXcd> blocks; // n*n entries

    const Eigen::MatrixXcd& at(int i, int j) const { return blocks[static_cast<size_t>(i) * n + j]; }
    Eigen::MatrixXcd& at(int i, int j) { return blocks[static_cast<size_t>(i) * n + j]; }
};

/// One singular triple of the decomposed operator.
///
/// The right singular vector lives on the input grid and is stored in
/// frequency-support form: a list of (frequency, channel vector) terms, the
/// materialized vector being  sum_t  channels[t] (x) basis(freq[t]).
/// Stride-1 entries have exactly one term; stride-s entries have up to s^2
/// terms, all on the alias set of out_freq. `left` is the channel vector of
/// the output-side singular vector (empty for zero-padded entries beyond the
/// operator's row rank, where no left partner exists).
struct SpectralEntry {
    double sigma = 0.0;
    Frequency out_freq;                                        // on the output (n/s) grid
    Eigen::VectorXcd left;                                     // m_out, may be empty
    std::vector<std::pair<Frequency, Eigen::VectorXcd>> right; // support terms on the n grid
    Eigen::VectorXcd fold_coeffs; // folded path only: raw p over (alias, channel) columns
};

struct SpectralDecomposition {
    int n = 0;        // input grid size
    int stride = 1;   // 1 or the layer stride
    int m_in = 0;
    int m_out = 0;
    std::vector<SpectralEntry> entries; // m_in * n^2 of them

    /// All sigma values, descending.
    std::vector<double> sorted_sigmas() const;
};

/// Aliases folded onto output frequency w under stride-s sampling:
/// {(w.i + l*n/s, w.j + r*n/s) mod n : l, r in [0, s)}, (l, r) row-major.
/// w lives on the (n/s)-grid.
std::vector<Frequency> alias_set(const Frequency& w_out, int n, int s);

/// Transfer blocks of one stride-1 layer: block(w)[o][c] is the transfer
/// coefficient of the (o, c) kernel slice at frequency w: the unnormalized
/// 2-D DFT of the zero-embedded slice evaluated at the negated frequency
/// (equivalently its conjugate for real kernels; the sign is fixed by the
/// kernel anchoring convention and is a relabeling w -> -w of the grid).
/// Normalization scales are folded in. Throws for stride > 1.
FrequencyBlockMap frequency_blocks(const ConvLayer& layer, int n);

/// Per-frequency product of layer blocks in application order; adds the
/// identity per frequency when the stack has a skip connection. All strides
/// must be 1; normalization is folded layer by layer.
FrequencyBlockMap compose_blocks(const NetworkSpec& net, int n);

/// Full SVD of a stride-1 stack via per-frequency block SVDs. Entries count
/// m_in * n^2; right singular vectors are channel-vector (x) basis elements.
SpectralDecomposition svd_stride1(const NetworkSpec& net, int n);

/// Full SVD of a single strided layer via frequency folding: per output
/// frequency w, the m_out x (m_in s^2) matrix X with columns
/// (1/s) * sigma^(i,j) x^(i,j) over aliases i and channel indices j is
/// decomposed; right vectors combine the alias-set basis elements.
SpectralDecomposition svd_strided(const ConvLayer& layer, int n);

/// Descending (sigma, frequency) list for a stride-1 stack or a
/// single-layer strided net. Mixed-stride stacks are not decomposable here.
std::vector<std::pair<double, Frequency>> full_spectrum(const NetworkSpec& net, int n);

/// Top singular value of the composed block at `freq`: the largest output
/// displacement over unit channel vectors riding that basis element.
double predicted_disturbance(const NetworkSpec& net, int n, const Frequency& freq);

/// Materializes an entry's right singular vector as per-channel complex
/// grids (m_in of them, each n x n).
std::vector<ComplexGrid> materialize_right(const SpectralEntry& entry, int m_in, int n);

} // namespace convspect
