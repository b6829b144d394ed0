#include "convspect/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convspect/rng.hpp"

namespace convspect {

Label argmax_label(const Eigen::VectorXd& logits) {
    Label best = 0;
    for (int i = 1; i < logits.size(); ++i)
        if (logits(i) > logits(best)) best = i; // strict: ties keep the lowest index
    return best;
}

namespace {

double uniform_init(Rng& rng, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return rng.uniform(-bound, bound);
}

RealTensor relu(const RealTensor& x) {
    RealTensor out = x;
    for (double& v : out.v) v = std::max(0.0, v);
    return out;
}

RealTensor max_pool2(const RealTensor& x) {
    if (x.n % 2 != 0) throw ContractError("max_pool2: grid size must be even");
    RealTensor out(x.channels, x.n / 2);
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < out.n; ++y)
            for (int xx = 0; xx < out.n; ++xx)
                out.at(c, y, xx) = std::max(std::max(x.at(c, 2 * y, 2 * xx), x.at(c, 2 * y, 2 * xx + 1)),
                                            std::max(x.at(c, 2 * y + 1, 2 * xx), x.at(c, 2 * y + 1, 2 * xx + 1)));
    return out;
}

} // namespace

ToyCnnOracle::ToyCnnOracle(ToyCnnSpec spec) : spec_(std::move(spec)) {
    if (spec_.in_channels < 1 || spec_.num_classes < 1 || spec_.stages.empty())
        throw ContractError("toy-cnn: need >= 1 input channel, class, and stage");
    Rng rng(spec_.seed);
    int in_c = spec_.in_channels;
    for (const auto& st : spec_.stages) {
        if (st.out_channels < 1 || st.k < 1 || st.stride < 1)
            throw ContractError("toy-cnn: invalid stage");
        ConvLayer layer;
        layer.kernel = ConvKernel(st.out_channels, in_c, st.k, st.k);
        layer.stride = st.stride;
        const int fan_in = in_c * st.k * st.k;
        for (int o = 0; o < st.out_channels; ++o)
            for (int c = 0; c < in_c; ++c)
                for (int dy = 0; dy < st.k; ++dy)
                    for (int dx = 0; dx < st.k; ++dx)
                        layer.kernel.at(o, c, dy, dx) = uniform_init(rng, fan_in);
        layers_.push_back(std::move(layer));
        in_c = st.out_channels;
    }
    readout_ = Eigen::MatrixXd(spec_.num_classes, in_c);
    for (int r = 0; r < spec_.num_classes; ++r)
        for (int c = 0; c < in_c; ++c) readout_(r, c) = uniform_init(rng, in_c);
}

RealTensor ToyCnnOracle::features(const RealTensor& x) const {
    if (x.channels != spec_.in_channels) throw ContractError("toy-cnn: input channel mismatch");
    RealTensor cur = x;
    for (size_t t = 0; t < layers_.size(); ++t) {
        cur = apply_conv(layers_[t], cur);
        const ConvStageSpec& st = spec_.stages[t];
        if (st.activation == Activation::Relu) cur = relu(cur);
        if (st.pool == Pool::Max2) cur = max_pool2(cur);
    }
    return cur;
}

Eigen::VectorXd ToyCnnOracle::logits(const RealTensor& x) const {
    const RealTensor f = features(x);
    Eigen::VectorXd pooled(f.channels);
    const double inv = 1.0 / (static_cast<double>(f.n) * f.n);
    for (int c = 0; c < f.channels; ++c) {
        double acc = 0.0;
        for (int y = 0; y < f.n; ++y)
            for (int xx = 0; xx < f.n; ++xx) acc += f.at(c, y, xx);
        pooled(c) = acc * inv;
    }
    return readout_ * pooled;
}

Label ToyCnnOracle::label_for(const RealTensor& x) { return argmax_label(logits(x)); }

std::optional<NetworkSpec> ToyCnnOracle::linear_network() const {
    for (const auto& st : spec_.stages)
        if (st.activation != Activation::Linear || st.pool != Pool::None || st.stride != 1)
            return std::nullopt;
    NetworkSpec net;
    net.layers = layers_;
    net.skip = false;
    return net;
}

std::string ToyCnnOracle::descriptor() const {
    std::ostringstream os;
    os << "toy-cnn(seed=" << spec_.seed << ",in=" << spec_.in_channels
       << ",classes=" << spec_.num_classes << ",stages=";
    for (size_t t = 0; t < spec_.stages.size(); ++t) {
        const auto& st = spec_.stages[t];
        if (t) os << "|";
        os << st.out_channels << "c" << st.k << "k" << st.stride << "s"
           << (st.activation == Activation::Relu ? "r" : "l") << (st.pool == Pool::Max2 ? "p" : "-");
    }
    os << ")";
    return os.str();
}

ToyMlpOracle::ToyMlpOracle(ToyMlpSpec spec) : spec_(std::move(spec)) {
    if (spec_.n < 1 || spec_.in_channels < 1 || spec_.num_classes < 1)
        throw ContractError("toy-mlp: invalid spec");
    for (int h : spec_.hidden)
        if (h < 1) throw ContractError("toy-mlp: hidden sizes must be positive");
    Rng rng(spec_.seed);
    int prev = spec_.in_channels * spec_.n * spec_.n;
    std::vector<int> sizes = spec_.hidden;
    sizes.push_back(spec_.num_classes);
    for (int sz : sizes) {
        Eigen::MatrixXd w(sz, prev);
        Eigen::VectorXd b(sz);
        for (int r = 0; r < sz; ++r)
            for (int c = 0; c < prev; ++c) w(r, c) = uniform_init(rng, prev);
        for (int r = 0; r < sz; ++r) b(r) = uniform_init(rng, prev);
        weights_.push_back(std::move(w));
        biases_.push_back(std::move(b));
        prev = sz;
    }
}

ToyMlpOracle::ToyMlpOracle(ToyMlpSpec spec, std::vector<Eigen::MatrixXd> weights,
                           std::vector<Eigen::VectorXd> biases)
    : spec_(std::move(spec)), weights_(std::move(weights)), biases_(std::move(biases)) {
    if (weights_.size() != biases_.size() || weights_.empty())
        throw ContractError("toy-mlp: weights/biases layer count mismatch");
}

Eigen::VectorXd ToyMlpOracle::logits(const RealTensor& x) const {
    if (x.channels != spec_.in_channels || x.n != spec_.n)
        throw ContractError("toy-mlp: input shape mismatch");
    Eigen::VectorXd cur = Eigen::Map<const Eigen::VectorXd>(x.v.data(), static_cast<Eigen::Index>(x.v.size()));
    for (size_t t = 0; t < weights_.size(); ++t) {
        cur = weights_[t] * cur + biases_[t];
        if (t + 1 < weights_.size()) cur = cur.cwiseMax(0.0);
    }
    return cur;
}

Label ToyMlpOracle::label_for(const RealTensor& x) { return argmax_label(logits(x)); }

std::string ToyMlpOracle::descriptor() const {
    std::ostringstream os;
    os << "toy-mlp(seed=" << spec_.seed << ",n=" << spec_.n << ",in=" << spec_.in_channels
       << ",hidden=";
    for (size_t t = 0; t < spec_.hidden.size(); ++t) os << (t ? "|" : "") << spec_.hidden[t];
    os << ",classes=" << spec_.num_classes << ")";
    return os.str();
}

std::unique_ptr<ToyCnnOracle> make_toy_cnn(const ToyCnnSpec& spec) {
    return std::make_unique<ToyCnnOracle>(spec);
}

std::unique_ptr<ToyMlpOracle> make_toy_mlp(std::uint64_t seed, int n, int in_channels,
                                           const std::vector<int>& hidden, int num_classes) {
    ToyMlpSpec spec;
    spec.seed = seed;
    spec.n = n;
    spec.in_channels = in_channels;
    spec.hidden = hidden;
    spec.num_classes = num_classes;
    return std::make_unique<ToyMlpOracle>(spec);
}

std::vector<RealTensor> synthetic_batch(std::uint64_t seed, int n, int channels, int count,
                                        BatchGenerator gen) {
    if (count < 1) throw ContractError("synthetic_batch: count must be >= 1");
    Rng rng(seed);
    std::vector<RealTensor> batch;
    batch.reserve(static_cast<size_t>(count));

    if (gen == BatchGenerator::Uniform) {
        for (int idx = 0; idx < count; ++idx) {
            RealTensor t(channels, n);
            for (double& v : t.v) v = rng.uniform();
            batch.push_back(std::move(t));
        }
        return batch;
    }

    // Two-class gaussian mixture, class = index % 2. Each class mean is a
    // smooth low-frequency surface; samples add sigma = 0.1 noise.
    std::vector<RealTensor> means;
    for (int cls = 0; cls < 2; ++cls) {
        RealTensor mean(channels, n);
        for (int c = 0; c < channels; ++c) {
            const double ax = rng.uniform(0.5, 2.0), ay = rng.uniform(0.5, 2.0);
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            const double level = cls == 0 ? 0.35 : 0.65;
            for (int y = 0; y < n; ++y)
                for (int xx = 0; xx < n; ++xx)
                    mean.at(c, y, xx) =
                        level + 0.15 * std::sin(2.0 * M_PI * (ax * y + ay * xx) / n + phase);
        }
        means.push_back(std::move(mean));
    }
    for (int idx = 0; idx < count; ++idx) {
        const RealTensor& mean = means[static_cast<size_t>(idx % 2)];
        RealTensor t(channels, n);
        for (size_t i = 0; i < t.v.size(); ++i)
            t.v[i] = std::clamp(mean.v[i] + 0.1 * rng.gauss(), 0.0, 1.0);
        batch.push_back(std::move(t));
    }
    return batch;
}

std::vector<Label> clean_labels(Oracle& oracle, const std::vector<RealTensor>& batch) {
    std::vector<Label> labels;
    labels.reserve(batch.size());
    for (size_t idx = 0; idx < batch.size(); ++idx) {
        try {
            labels.push_back(oracle.query(batch[idx]));
        } catch (OracleError& e) {
            e.add_context("image " + std::to_string(idx));
            throw;
        }
    }
    return labels;
}

double fool_ratio_cached(Oracle& oracle, const std::vector<RealTensor>& batch,
                         const std::vector<Label>& clean, const Perturbation& p) {
    if (batch.empty()) throw ContractError("fool_ratio: batch must be nonempty");
    if (clean.size() != batch.size()) throw ContractError("fool_ratio: clean label count mismatch");
    int changed = 0;
    for (size_t idx = 0; idx < batch.size(); ++idx) {
        try {
            if (oracle.query(apply_perturbation(batch[idx], p)) != clean[idx]) ++changed;
        } catch (OracleError& e) {
            e.add_context("image " + std::to_string(idx));
            throw;
        }
    }
    return static_cast<double>(changed) / static_cast<double>(batch.size());
}

double fool_ratio(Oracle& oracle, const std::vector<RealTensor>& batch, const Perturbation& p) {
    if (batch.empty()) throw ContractError("fool_ratio: batch must be nonempty");
    return fool_ratio_cached(oracle, batch, clean_labels(oracle, batch), p);
}

} // namespace convspect
