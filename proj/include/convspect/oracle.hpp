#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convspect/conv.hpp"
#include "convspect/perturb.hpp"
#include "convspect/tensor.hpp"

namespace convspect {

using Label = int;

/// Label-only classifier interface. Every query increments the atomic
/// counter by exactly one; built-in oracles are pure functions of
/// (spec, input), so repeated queries are bit-identical.
class Oracle {
  public:
    virtual ~Oracle() = default;

    Label query(const RealTensor& x) {
        ++count_;
        return label_for(x);
    }

    std::uint64_t query_count() const { return count_.load(); }
    virtual std::string descriptor() const = 0;

    /// Expected input channel count, 0 when unknown (e.g. remote oracles).
    virtual int input_channels() const { return 0; }

  protected:
    virtual Label label_for(const RealTensor& x) = 0;

  private:
    std::atomic<std::uint64_t> count_{0};
};

enum class Activation { Linear, Relu };
enum class Pool { None, Max2 };

struct ConvStageSpec {
    int out_channels = 1;
    int k = 3;
    int stride = 1;
    Activation activation = Activation::Relu;
    Pool pool = Pool::None;
};

/// Deterministic random-weight CNN: conv stages, then global average pool
/// and a bias-free linear readout. Weights are uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] drawn from the pinned PRNG in a fixed
/// order (stages front to back, each kernel in (o, c, dy, dx) order, then
/// the readout row-major). Conv layers carry no bias.
struct ToyCnnSpec {
    std::uint64_t seed = 0;
    int in_channels = 1;
    int num_classes = 2;
    std::vector<ConvStageSpec> stages;
};

/// Deterministic random-weight MLP: flatten, affine(+ReLU) hidden layers,
/// affine readout, argmax. Weights and biases both uniform in
/// [-1/sqrt(fan_in), +1/sqrt(fan_in)] (weights row-major, then the bias).
struct ToyMlpSpec {
    std::uint64_t seed = 0;
    int n = 8;
    int in_channels = 1;
    std::vector<int> hidden;
    int num_classes = 2;
};

class ToyCnnOracle : public Oracle {
  public:
    ToyCnnOracle(ToyCnnSpec spec);

    std::string descriptor() const override;

    /// Feature tensor after the conv stages (before readout).
    RealTensor features(const RealTensor& x) const;

    /// Logits vector; argmax with lowest-index tie break gives the label.
    Eigen::VectorXd logits(const RealTensor& x) const;

    /// The conv stack as a decomposable NetworkSpec, when every stage is
    /// linear, unpooled, and stride 1.
    std::optional<NetworkSpec> linear_network() const;

    const ToyCnnSpec& spec() const { return spec_; }
    const Eigen::MatrixXd& readout() const { return readout_; }
    int input_channels() const override { return spec_.in_channels; }

  protected:
    Label label_for(const RealTensor& x) override;

  private:
    ToyCnnSpec spec_;
    std::vector<ConvLayer> layers_;
    Eigen::MatrixXd readout_; // num_classes x last_channels
};

class ToyMlpOracle : public Oracle {
  public:
    ToyMlpOracle(ToyMlpSpec spec);

    /// Test hook: explicit weights/biases instead of seeded init.
    ToyMlpOracle(ToyMlpSpec spec, std::vector<Eigen::MatrixXd> weights,
                 std::vector<Eigen::VectorXd> biases);

    std::string descriptor() const override;
    Eigen::VectorXd logits(const RealTensor& x) const;
    const ToyMlpSpec& spec() const { return spec_; }
    int input_channels() const override { return spec_.in_channels; }

  protected:
    Label label_for(const RealTensor& x) override;

  private:
    ToyMlpSpec spec_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

std::unique_ptr<ToyCnnOracle> make_toy_cnn(const ToyCnnSpec& spec);
std::unique_ptr<ToyMlpOracle> make_toy_mlp(std::uint64_t seed, int n, int in_channels,
                                           const std::vector<int>& hidden, int num_classes);

Label argmax_label(const Eigen::VectorXd& logits);

enum class BatchGenerator { Uniform, GaussianMixture };

/// Deterministic batch of tensors with values in [0, 1]. Uniform: iid
/// U[0,1]. GaussianMixture: two classes assigned round-robin by index
/// (class = index % 2), each a smooth seeded class mean plus sigma = 0.1
/// noise, clipped.
std::vector<RealTensor> synthetic_batch(std::uint64_t seed, int n, int channels, int count,
                                        BatchGenerator gen);

/// Fraction of the batch whose label changes under the perturbation.
/// Costs exactly 2 * |batch| oracle queries. Oracle failures are rethrown
/// with the failing image's index prepended.
double fool_ratio(Oracle& oracle, const std::vector<RealTensor>& batch, const Perturbation& p);

/// Clean labels for a batch, |batch| queries. Heatmap/search loops compute
/// these once and reuse them across frequencies.
std::vector<Label> clean_labels(Oracle& oracle, const std::vector<RealTensor>& batch);

/// fool_ratio against precomputed clean labels (|batch| queries).
double fool_ratio_cached(Oracle& oracle, const std::vector<RealTensor>& batch,
                         const std::vector<Label>& clean, const Perturbation& p);

} // namespace convspect
