#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "convspect/conv.hpp"
#include "helpers.hpp"

using namespace convspect;
using testutil::random_layer;
using testutil::random_tensor;
using testutil::vec_tensor;

namespace {

ConvLayer identity_layer() {
    ConvLayer l;
    l.kernel = ConvKernel(1, 1, 1, 1);
    l.kernel.at(0, 0, 0, 0) = 1.0;
    return l;
}

} // namespace

TEST_CASE("identity and scalar kernels") {
    testutil::Rng rng(1);
    const RealTensor x = random_tensor(rng, 1, 4);

    const RealTensor y = apply_conv(identity_layer(), x);
    for (size_t i = 0; i < x.v.size(); ++i) CHECK(y.v[i] == x.v[i]);

    ConvLayer scaled = identity_layer();
    scaled.kernel.at(0, 0, 0, 0) = -2.5;
    const RealTensor z = apply_conv(scaled, x);
    for (size_t i = 0; i < x.v.size(); ++i) CHECK(z.v[i] == doctest::Approx(-2.5 * x.v[i]));
}

TEST_CASE("shift kernel acts as a circular column shift") {
    // delta at offset (0,1): output(y,x) = input(y, x+1 mod n)
    ConvLayer shift;
    shift.kernel = ConvKernel(1, 1, 1, 2);
    shift.kernel.at(0, 0, 0, 1) = 1.0;

    testutil::Rng rng(2);
    const int n = 4;
    const RealTensor x = random_tensor(rng, 1, n);
    const RealTensor y = apply_conv(shift, x);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) CHECK(y.at(0, r, c) == doctest::Approx(x.at(0, r, (c + 1) % n)));

    // against the dense permutation matrix
    const Eigen::MatrixXd m = materialize_dense(shift, n);
    const Eigen::VectorXd dense_out = m * vec_tensor(x);
    CHECK((dense_out - vec_tensor(y)).cwiseAbs().maxCoeff() < 1e-14);
    // permutation: every row has exactly one 1
    for (int r = 0; r < m.rows(); ++r) {
        CHECK(m.row(r).sum() == doctest::Approx(1.0));
        CHECK(m.row(r).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    }
}

TEST_CASE("materialize_dense pinned cases") {
    const Eigen::MatrixXd eye = materialize_dense(identity_layer(), 2);
    CHECK((eye - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    // 1-D circulant embedded at n=2: row [c0, c1] has eigenvalues c0 +- c1
    ConvLayer circ;
    circ.kernel = ConvKernel(1, 1, 1, 2);
    circ.kernel.at(0, 0, 0, 0) = 0.75; // c0
    circ.kernel.at(0, 0, 0, 1) = -0.3; // c1
    const Eigen::MatrixXd m = materialize_dense(circ, 2);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    std::vector<double> eig;
    for (int t = 0; t < es.eigenvalues().size(); ++t) eig.push_back(es.eigenvalues()(t).real());
    std::sort(eig.begin(), eig.end());
    // each 1-D eigenvalue c0 +- c1 appears once per row frequency
    CHECK(eig.front() == doctest::Approx(0.75 - 0.3).epsilon(1e-12));
    CHECK(eig.back() == doctest::Approx(0.75 + 0.3).epsilon(1e-12));

    // average pooling as a conv: orthogonal rows of norm 1/2
    ConvLayer pool;
    pool.kernel = ConvKernel(1, 1, 2, 2);
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) pool.kernel.at(0, 0, dy, dx) = 0.25;
    pool.stride = 2;
    const Eigen::MatrixXd p = materialize_dense(pool, 4);
    CHECK(p.rows() == 4);
    CHECK(p.cols() == 16);
    const Eigen::MatrixXd gram = p * p.transpose();
    CHECK((gram - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("apply_conv agrees with materialize_dense over a random sweep") {
    testutil::Rng rng(3);
    for (int n : {4, 6, 8}) {
        for (int s : {1, 2}) {
            for (int rep = 0; rep < 6; ++rep) {
                const int m_in = 1 + static_cast<int>(rng.uniform_index(3));
                const int m_out = 1 + static_cast<int>(rng.uniform_index(3));
                const int k = 1 + static_cast<int>(rng.uniform_index(3));
                const ConvLayer layer = random_layer(rng, m_out, m_in, k, s, rep % 2 == 1);
                const RealTensor x = random_tensor(rng, m_in, n, -1.0, 1.0);
                const RealTensor y = apply_conv(layer, x);
                const Eigen::VectorXd dense_out = materialize_dense(layer, n) * vec_tensor(x);
                CHECK((dense_out - vec_tensor(y)).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
}

TEST_CASE("stride-1 shift equivariance") {
    testutil::Rng rng(4);
    const int n = 6;
    const ConvLayer layer = random_layer(rng, 2, 2, 3);
    const RealTensor x = random_tensor(rng, 2, n, -1.0, 1.0);

    auto shift_xy = [&](const RealTensor& t, int dy, int dx) {
        RealTensor out(t.channels, t.n);
        for (int c = 0; c < t.channels; ++c)
            for (int y = 0; y < t.n; ++y)
                for (int xx = 0; xx < t.n; ++xx)
                    out.at(c, (y + dy) % t.n, (xx + dx) % t.n) = t.at(c, y, xx);
        return out;
    };

    const RealTensor a = apply_conv(layer, shift_xy(x, 2, 5));
    const RealTensor b = shift_xy(apply_conv(layer, x), 2, 5);
    for (size_t i = 0; i < a.v.size(); ++i) CHECK(std::abs(a.v[i] - b.v[i]) < 1e-12);
}

TEST_CASE("normalization folding preserves semantics") {
    // gamma = 1 leaves the kernel unchanged
    ConvLayer plain = identity_layer();
    plain.norm_scale = std::vector<double>{1.0};
    const ConvLayer folded1 = fold_normalization(plain);
    CHECK_FALSE(folded1.norm_scale.has_value());
    CHECK(folded1.kernel.at(0, 0, 0, 0) == 1.0);

    // gamma = 2 doubles every weight
    ConvLayer doubled = identity_layer();
    doubled.norm_scale = std::vector<double>{2.0};
    CHECK(fold_normalization(doubled).kernel.at(0, 0, 0, 0) == 2.0);

    // random gamma: folded pipeline equals unfolded pipeline
    testutil::Rng rng(5);
    const ConvLayer layer = random_layer(rng, 3, 2, 3, 1, true);
    const RealTensor x = random_tensor(rng, 2, 4, -1.0, 1.0);
    const RealTensor with_norm = apply_conv(layer, x);
    const RealTensor without = apply_conv(fold_normalization(layer), x);
    for (size_t i = 0; i < with_norm.v.size(); ++i)
        CHECK(std::abs(with_norm.v[i] - without.v[i]) < 1e-12);

    ConvLayer degenerate = identity_layer();
    degenerate.norm_scale = std::vector<double>{0.0};
    CHECK_THROWS_AS(fold_normalization(degenerate), ContractError);
    degenerate.norm_scale = std::vector<double>{std::nan("")};
    CHECK_THROWS_AS(fold_normalization(degenerate), ContractError);
}

TEST_CASE("apply_network composition, skip, and linearity") {
    testutil::Rng rng(6);

    NetworkSpec empty;
    const RealTensor x1 = random_tensor(rng, 1, 4);
    CHECK_THROWS_AS(apply_network(empty, x1), ContractError);

    NetworkSpec skip_id;
    skip_id.layers.push_back(identity_layer());
    skip_id.skip = true;
    const RealTensor doubled = apply_network(skip_id, x1);
    for (size_t i = 0; i < x1.v.size(); ++i) CHECK(doubled.v[i] == doctest::Approx(2.0 * x1.v[i]));

    // three random layers against the dense product
    const int n = 8;
    NetworkSpec net;
    net.layers.push_back(random_layer(rng, 2, 2, 3));
    net.layers.push_back(random_layer(rng, 3, 2, 3));
    net.layers.push_back(random_layer(rng, 2, 3, 3));
    const RealTensor x = random_tensor(rng, 2, n, -1.0, 1.0);
    const RealTensor y = apply_network(net, x);
    const Eigen::VectorXd dense_out = testutil::dense_network(net, n) * vec_tensor(x);
    CHECK((dense_out - vec_tensor(y)).cwiseAbs().maxCoeff() < 1e-9);

    // linearity
    const RealTensor z = random_tensor(rng, 2, n, -1.0, 1.0);
    RealTensor combo(2, n);
    for (size_t i = 0; i < combo.v.size(); ++i) combo.v[i] = 1.5 * x.v[i] - 0.25 * z.v[i];
    const RealTensor lhs = apply_network(net, combo);
    const RealTensor fx = apply_network(net, x);
    const RealTensor fz = apply_network(net, z);
    for (size_t i = 0; i < lhs.v.size(); ++i)
        CHECK(std::abs(lhs.v[i] - (1.5 * fx.v[i] - 0.25 * fz.v[i])) < 1e-10);
}

TEST_CASE("contract errors") {
    testutil::Rng rng(7);
    const ConvLayer layer = random_layer(rng, 2, 3, 3);
    const RealTensor wrong_channels = random_tensor(rng, 2, 4);
    CHECK_THROWS_AS(apply_conv(layer, wrong_channels), ContractError);

    ConvLayer strided = random_layer(rng, 1, 1, 2, 2);
    const RealTensor odd = random_tensor(rng, 1, 5);
    CHECK_THROWS_AS(apply_conv(strided, odd), ContractError);

    const ConvLayer big_kernel = random_layer(rng, 1, 1, 5);
    const RealTensor small = random_tensor(rng, 1, 4);
    CHECK_THROWS_AS(apply_conv(big_kernel, small), ContractError);

    NetworkSpec bad_chain;
    bad_chain.layers.push_back(random_layer(rng, 2, 1, 1));
    bad_chain.layers.push_back(random_layer(rng, 1, 3, 1));
    CHECK_THROWS_AS(validate_network(bad_chain), ContractError);

    NetworkSpec bad_skip;
    bad_skip.layers.push_back(random_layer(rng, 2, 1, 1));
    bad_skip.skip = true;
    CHECK_THROWS_AS(validate_network(bad_skip), ContractError);
}
