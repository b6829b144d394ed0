#include "convspect/spectra.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

namespace convspect {

std::vector<double> SpectralDecomposition::sorted_sigmas() const {
    std::vector<double> s;
    s.reserve(entries.size());
    for (const auto& e : entries) s.push_back(e.sigma);
    std::sort(s.begin(), s.end(), std::greater<double>());
    return s;
}

std::vector<Frequency> alias_set(const Frequency& w_out, int n, int s) {
    if (s < 1 || n % s != 0) throw ContractError("alias_set: s must divide n");
    const int n_out = n / s;
    if (w_out.n != n_out || !w_out.valid())
        throw ContractError("alias_set: output frequency not on the n/s grid");
    std::vector<Frequency> aliases;
    aliases.reserve(static_cast<size_t>(s) * s);
    for (int l = 0; l < s; ++l)
        for (int r = 0; r < s; ++r)
            aliases.push_back({(w_out.i + l * n_out) % n, (w_out.j + r * n_out) % n, n});
    return aliases;
}

FrequencyBlockMap frequency_blocks(const ConvLayer& layer, int n) {
    if (layer.stride != 1)
        throw ContractError("frequency_blocks: stride > 1 layers decompose via svd_strided");
    const ConvLayer folded = fold_normalization(layer);
    validate_layer(folded, n);
    const ConvKernel& k = folded.kernel;

    FrequencyBlockMap map;
    map.n = n;
    map.blocks.assign(static_cast<size_t>(n) * n,
                      Eigen::MatrixXcd::Zero(k.out_channels, k.in_channels));
    // e(i*dy + j*dx) table, phase reduced mod n
    std::vector<Complex> unit(n);
    for (int t = 0; t < n; ++t) {
        const double ang = 2.0 * M_PI * t / n;
        unit[t] = Complex(std::cos(ang), std::sin(ang));
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Eigen::MatrixXcd& g = map.at(i, j);
            for (int o = 0; o < k.out_channels; ++o) {
                for (int c = 0; c < k.in_channels; ++c) {
                    Complex acc(0.0, 0.0);
                    for (int dy = 0; dy < k.k_h; ++dy)
                        for (int dx = 0; dx < k.k_w; ++dx)
                            acc += k.at(o, c, dy, dx) *
                                   unit[static_cast<size_t>((static_cast<long long>(i) * dy +
                                                             static_cast<long long>(j) * dx) %
                                                            n)];
                    g(o, c) = acc;
                }
            }
        }
    }
    return map;
}

FrequencyBlockMap compose_blocks(const NetworkSpec& net, int n) {
    validate_network(net);
    for (const auto& l : net.layers)
        if (l.stride != 1) throw ContractError("compose_blocks: all strides must be 1");

    FrequencyBlockMap acc = frequency_blocks(net.layers.front(), n);
    for (size_t t = 1; t < net.layers.size(); ++t) {
        const FrequencyBlockMap next = frequency_blocks(net.layers[t], n);
        for (size_t w = 0; w < acc.blocks.size(); ++w) acc.blocks[w] = next.blocks[w] * acc.blocks[w];
    }
    if (net.skip) {
        const int m = net.layers.front().kernel.in_channels;
        for (auto& b : acc.blocks) b += Eigen::MatrixXcd::Identity(m, m);
    }
    return acc;
}

SpectralDecomposition svd_stride1(const NetworkSpec& net, int n) {
    const FrequencyBlockMap blocks = compose_blocks(net, n);
    const int m_in = net.layers.front().kernel.in_channels;
    const int m_out = net.layers.back().kernel.out_channels;

    SpectralDecomposition dec;
    dec.n = n;
    dec.stride = 1;
    dec.m_in = m_in;
    dec.m_out = m_out;
    dec.entries.reserve(static_cast<size_t>(m_in) * n * n);
    const int rank_bound = std::min(m_in, m_out);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Frequency w{i, j, n};
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(blocks.at(i, j),
                                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& sig = svd.singularValues();
            for (int t = 0; t < m_in; ++t) {
                SpectralEntry e;
                e.sigma = t < rank_bound ? sig(t) : 0.0;
                e.out_freq = w;
                if (t < m_out) e.left = svd.matrixU().col(t);
                e.right.emplace_back(w, svd.matrixV().col(t));
                dec.entries.push_back(std::move(e));
            }
        }
    }
    return dec;
}

SpectralDecomposition svd_strided(const ConvLayer& layer, int n) {
    const int s = layer.stride;
    if (s < 2) throw ContractError("svd_strided: stride must be > 1 (use svd_stride1)");
    if (n % s != 0) throw ContractError("svd_strided: requires n == 0 (mod s)");
    validate_layer(layer, n);

    // Stride-1 SVD of the kernel at every input frequency.
    ConvLayer base = fold_normalization(layer);
    base.stride = 1;
    const FrequencyBlockMap blocks = frequency_blocks(base, n);
    const int m_in = layer.kernel.in_channels;
    const int m_out = layer.kernel.out_channels;
    const int rank1 = std::min(m_in, m_out);

    std::vector<Eigen::VectorXd> sig1(blocks.blocks.size());
    std::vector<Eigen::MatrixXcd> u1(blocks.blocks.size()), v1(blocks.blocks.size());
    for (size_t w = 0; w < blocks.blocks.size(); ++w) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(blocks.blocks[w],
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
        sig1[w] = svd.singularValues();
        u1[w] = svd.matrixU();
        v1[w] = svd.matrixV();
    }

    const int n_out = n / s;
    const double sample_scale = 1.0 / s; // basis(n) subsampled by s is (1/s) * basis(n/s)
    constexpr double kRankCutoff = 1e-10; // numerical-rank floor for the folded blocks
    SpectralDecomposition dec;
    dec.n = n;
    dec.stride = s;
    dec.m_in = m_in;
    dec.m_out = m_out;
    dec.entries.reserve(static_cast<size_t>(m_in) * n * n);

    const int cols = m_in * s * s;
    for (int oi = 0; oi < n_out; ++oi) {
        for (int oj = 0; oj < n_out; ++oj) {
            const Frequency w_out{oi, oj, n_out};
            const std::vector<Frequency> aliases = alias_set(w_out, n, s);

            // columns ordered alias-major then channel index
            Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(m_out, cols);
            for (size_t q = 0; q < aliases.size(); ++q) {
                const size_t wi = static_cast<size_t>(aliases[q].i) * n + aliases[q].j;
                for (int t = 0; t < rank1; ++t)
                    x.col(static_cast<Eigen::Index>(q) * m_in + t) =
                        sample_scale * sig1[wi](t) * u1[wi].col(t);
            }

            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& sig = svd.singularValues();
            const int rank_bound = std::min(m_out, cols);
            for (int t = 0; t < cols; ++t) {
                SpectralEntry e;
                e.sigma = t < rank_bound && sig(t) >= kRankCutoff ? sig(t) : 0.0;
                e.out_freq = w_out;
                if (t < m_out) e.left = svd.matrixU().col(t);
                e.fold_coeffs = svd.matrixV().col(t);
                for (size_t q = 0; q < aliases.size(); ++q) {
                    const size_t wi = static_cast<size_t>(aliases[q].i) * n + aliases[q].j;
                    Eigen::VectorXcd chan = Eigen::VectorXcd::Zero(m_in);
                    for (int jj = 0; jj < m_in; ++jj)
                        chan += e.fold_coeffs(static_cast<Eigen::Index>(q) * m_in + jj) * v1[wi].col(jj);
                    if (chan.norm() > 0.0) e.right.emplace_back(aliases[q], std::move(chan));
                }
                dec.entries.push_back(std::move(e));
            }
        }
    }
    return dec;
}

std::vector<std::pair<double, Frequency>> full_spectrum(const NetworkSpec& net, int n) {
    validate_network(net);
    const bool all_stride1 =
        std::all_of(net.layers.begin(), net.layers.end(), [](const ConvLayer& l) { return l.stride == 1; });

    SpectralDecomposition dec;
    if (all_stride1) {
        dec = svd_stride1(net, n);
    } else if (net.layers.size() == 1 && !net.skip) {
        dec = svd_strided(net.layers.front(), n);
    } else {
        throw ContractError("full_spectrum: only stride-1 stacks or a single strided layer decompose");
    }

    std::vector<std::pair<double, Frequency>> out;
    out.reserve(dec.entries.size());
    for (const auto& e : dec.entries) out.emplace_back(e.sigma, e.out_freq);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second.i != b.second.i) return a.second.i < b.second.i;
        return a.second.j < b.second.j;
    });
    return out;
}

double predicted_disturbance(const NetworkSpec& net, int n, const Frequency& freq) {
    if (freq.n != n || !freq.valid()) throw ContractError("predicted_disturbance: invalid frequency");
    const FrequencyBlockMap blocks = compose_blocks(net, n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(blocks.at(freq.i, freq.j));
    return svd.singularValues()(0);
}

std::vector<ComplexGrid> materialize_right(const SpectralEntry& entry, int m_in, int n) {
    std::vector<ComplexGrid> channels(static_cast<size_t>(m_in), ComplexGrid::Zero(n, n));
    for (const auto& [freq, chan] : entry.right) {
        const ComplexGrid b = fourier_basis(n, freq);
        for (int c = 0; c < m_in; ++c) channels[static_cast<size_t>(c)] += chan(c) * b;
    }
    return channels;
}

} // namespace convspect
