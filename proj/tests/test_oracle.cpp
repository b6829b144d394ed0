#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "convspect/oracle.hpp"
#include "helpers.hpp"

using namespace convspect;
using testutil::random_tensor;

namespace {

ToyCnnSpec small_cnn_spec(std::uint64_t seed) {
    ToyCnnSpec spec;
    spec.seed = seed;
    spec.in_channels = 3;
    spec.num_classes = 4;
    spec.stages.push_back({4, 3, 1, Activation::Relu, Pool::None});
    spec.stages.push_back({4, 3, 1, Activation::Relu, Pool::None});
    return spec;
}

// threshold classifier used for the fool-ratio construction below
class MeanThresholdOracle : public Oracle {
  public:
    std::string descriptor() const override { return "mean-threshold(0.5)"; }

  protected:
    Label label_for(const RealTensor& x) override {
        double acc = 0.0;
        for (double v : x.v) acc += v;
        return acc / static_cast<double>(x.v.size()) > 0.5 ? 1 : 0;
    }
};

class ConstantOracle : public Oracle {
  public:
    std::string descriptor() const override { return "constant(7)"; }

  protected:
    Label label_for(const RealTensor&) override { return 7; }
};

} // namespace

TEST_CASE("toy CNN determinism and tie-breaking") {
    auto a = make_toy_cnn(small_cnn_spec(99));
    auto b = make_toy_cnn(small_cnn_spec(99));
    testutil::Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const RealTensor x = random_tensor(rng, 3, 16);
        CHECK(a->query(x) == b->query(x));
    }
    CHECK(a->query_count() == 20);

    // all-zero logits resolve to class 0
    CHECK(argmax_label(Eigen::VectorXd::Zero(5)) == 0);
    Eigen::VectorXd tie(4);
    tie << 1.0, 2.0, 2.0, 0.0;
    CHECK(argmax_label(tie) == 1);
}

TEST_CASE("linear CNN readout tracks channel sums") {
    // identity conv + readout rows picking channel energies: the label is the
    // argmax channel mean
    ToyCnnSpec spec;
    spec.seed = 1;
    spec.in_channels = 2;
    spec.num_classes = 2;
    spec.stages.push_back({2, 1, 1, Activation::Linear, Pool::None});
    ToyCnnOracle oracle(spec);

    // overwrite behavior through the features/logits accessors instead of
    // weights: features of a linear 1x1 stage are linear mixes; verify via the
    // exposed network
    const auto net = oracle.linear_network();
    REQUIRE(net.has_value());
    testutil::Rng rng(8);
    const RealTensor x = random_tensor(rng, 2, 8);
    const RealTensor f = oracle.features(x);
    const RealTensor direct = apply_network(*net, x);
    for (size_t i = 0; i < f.v.size(); ++i) CHECK(f.v[i] == doctest::Approx(direct.v[i]));

    Eigen::VectorXd pooled(2);
    for (int c = 0; c < 2; ++c) {
        double acc = 0.0;
        for (int y = 0; y < 8; ++y)
            for (int xx = 0; xx < 8; ++xx) acc += f.at(c, y, xx);
        pooled(c) = acc / 64.0;
    }
    const Eigen::VectorXd logits = oracle.logits(x);
    const Eigen::VectorXd expect = oracle.readout() * pooled;
    CHECK((logits - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relu and pooling stages change the forward pass") {
    ToyCnnSpec spec = small_cnn_spec(3);
    spec.stages[1].pool = Pool::Max2;
    ToyCnnOracle oracle(spec);
    testutil::Rng rng(9);
    const RealTensor x = random_tensor(rng, 3, 16);
    const RealTensor f = oracle.features(x);
    CHECK(f.n == 8); // one max2 halves the grid
    for (double v : f.v) CHECK(v >= 0.0);
    CHECK_FALSE(oracle.linear_network().has_value());
}

TEST_CASE("toy MLP: zero weights give constant label 0") {
    ToyMlpSpec spec;
    spec.seed = 0;
    spec.n = 4;
    spec.in_channels = 1;
    spec.hidden = {8};
    spec.num_classes = 3;
    std::vector<Eigen::MatrixXd> weights{Eigen::MatrixXd::Zero(8, 16), Eigen::MatrixXd::Zero(3, 8)};
    std::vector<Eigen::VectorXd> biases{Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(3)};
    ToyMlpOracle oracle(spec, std::move(weights), std::move(biases));
    testutil::Rng rng(10);
    for (int rep = 0; rep < 10; ++rep) CHECK(oracle.query(random_tensor(rng, 1, 4)) == 0);
}

TEST_CASE("toy MLP: single-unit threshold behavior") {
    // one affine layer over a 1-pixel input: logits (0, v - 0.5)
    ToyMlpSpec spec;
    spec.seed = 0;
    spec.n = 1;
    spec.in_channels = 1;
    spec.num_classes = 2;
    Eigen::MatrixXd w(2, 1);
    w << 0.0, 1.0;
    Eigen::VectorXd b(2);
    b << 0.0, -0.5;
    ToyMlpOracle oracle(spec, {w}, {b});

    RealTensor low(1, 1), high(1, 1);
    low.v[0] = 0.2;
    high.v[0] = 0.9;
    CHECK(oracle.query(low) == 0);
    CHECK(oracle.query(high) == 1);
}

TEST_CASE("seeded MLP determinism") {
    auto a = make_toy_mlp(1234, 8, 1, {16, 16}, 4);
    auto b = make_toy_mlp(1234, 8, 1, {16, 16}, 4);
    testutil::Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const RealTensor x = random_tensor(rng, 1, 8);
        CHECK(a->query(x) == b->query(x));
    }
}

TEST_CASE("synthetic_batch determinism and value range") {
    const auto a = synthetic_batch(77, 16, 3, 1, BatchGenerator::Uniform);
    const auto b = synthetic_batch(77, 16, 3, 1, BatchGenerator::Uniform);
    REQUIRE(a.size() == 1);
    CHECK(a[0].v == b[0].v);

    const auto big = synthetic_batch(42, 16, 3, 64, BatchGenerator::Uniform);
    for (const auto& t : big) CHECK(t.in_unit_range());

    CHECK_THROWS_AS(synthetic_batch(1, 8, 1, 0, BatchGenerator::Uniform), ContractError);
}

TEST_CASE("gaussian mixture classes separate") {
    const auto batch = synthetic_batch(13, 8, 1, 64, BatchGenerator::GaussianMixture);
    double mean0 = 0.0, mean1 = 0.0;
    int c0 = 0, c1 = 0;
    for (size_t idx = 0; idx < batch.size(); ++idx) {
        double m = 0.0;
        for (double v : batch[idx].v) m += v;
        m /= static_cast<double>(batch[idx].v.size());
        if (idx % 2 == 0) {
            mean0 += m;
            ++c0;
        } else {
            mean1 += m;
            ++c1;
        }
    }
    mean0 /= c0;
    mean1 /= c1;
    CHECK(std::abs(mean0 - mean1) > 0.1);
    for (const auto& t : batch) CHECK(t.in_unit_range());
}

TEST_CASE("fool_ratio pinned cases and query accounting") {
    const int n = 8;
    const auto batch = synthetic_batch(5, n, 1, 16, BatchGenerator::Uniform);

    // zero perturbation never fools
    auto cnn = make_toy_cnn({/*seed=*/21, /*in_channels=*/1, /*num_classes=*/3,
                             {{2, 3, 1, Activation::Relu, Pool::None}}});
    const Perturbation zero = sfa_pattern(n, {1, 1, n}, 0.0);
    CHECK(fool_ratio(*cnn, batch, zero) == 0.0);
    CHECK(cnn->query_count() == 2 * batch.size());

    // constant classifier never fooled
    ConstantOracle constant;
    CHECK(fool_ratio(constant, batch, sfa_pattern(n, {1, 1, n}, 0.3)) == 0.0);

    // threshold classifier with half the batch straddling the boundary:
    // a DC bump of 0.1 flips exactly the images within 0.1 below it
    MeanThresholdOracle threshold;
    std::vector<RealTensor> straddle;
    for (int idx = 0; idx < 8; ++idx) {
        RealTensor t(1, n);
        const double level = idx < 4 ? 0.45 : 0.2; // first half flips, second cannot
        for (double& v : t.v) v = level;
        straddle.push_back(std::move(t));
    }
    const double ratio = fool_ratio(threshold, straddle, sfa_pattern(n, {0, 0, n}, 0.1));
    CHECK(ratio == doctest::Approx(0.5));

    CHECK_THROWS_AS(fool_ratio(threshold, {}, zero), ContractError);
}

TEST_CASE("oracle failures carry the image index") {
    class FailingOracle : public Oracle {
      public:
        std::string descriptor() const override { return "failing"; }

      protected:
        Label label_for(const RealTensor&) override {
            if (++calls_ == 6) throw TimeoutError("synthetic failure");
            return 0;
        }

      private:
        int calls_ = 0;
    };

    FailingOracle oracle;
    const auto batch = synthetic_batch(3, 4, 1, 4, BatchGenerator::Uniform);
    const Perturbation p = sfa_pattern(4, {1, 0, 4}, 0.2);
    try {
        fool_ratio(oracle, batch, p);
        FAIL("expected a TimeoutError");
    } catch (const TimeoutError& e) {
        // 6th query = perturbed image index 1
        CHECK(std::string(e.what()).find("image 1") != std::string::npos);
    }
}
