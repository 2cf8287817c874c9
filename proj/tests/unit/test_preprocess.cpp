#include "doctest.h"

#include <cmath>
#include <fstream>

#include "advprop/errors.hpp"
#include "advprop/preprocess.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace advprop;
using advprop::testing::random_matrix;
using advprop::testing::TempDir;

TEST_CASE("simple normalization on a two-point dataset") {
    const Matrix inputs(2, 1, {0.0, 2.0});
    const SimpleNormTransform t = fit_simple_norm(inputs);
    CHECK(t.mean == doctest::Approx(1.0));
    CHECK(t.stddev == doctest::Approx(1.0));
    const Matrix out = apply_simple_norm(t, inputs);
    CHECK(out(0, 0) == doctest::Approx(-1.0));
    CHECK(out(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalized training data has zero mean and unit spread") {
    Rng rng(5);
    const Matrix inputs = random_matrix(200, 7, rng, 0.0, 1.0);
    const SimpleNormTransform t = fit_simple_norm(inputs);
    const Matrix out = apply_simple_norm(t, inputs);
    const MeanStd ms = mean_std(out);
    CHECK(std::abs(ms.mean) < 1e-9);
    CHECK(std::abs(ms.stddev - 1.0) < 1e-9);
}

TEST_CASE("test data is transformed with the train statistics") {
    Dataset train = make_dataset(Matrix(2, 1, {0.0, 2.0}), {0, 1}, 10, "train");
    Dataset test = make_dataset(Matrix(2, 1, {4.0, 6.0}), {0, 1}, 10, "test");
    std::vector<Dataset*> others{&test};
    const SimpleNormTransform t = normalize_simple(train, others);
    CHECK(t.mean == doctest::Approx(1.0));
    // Test values shift by the train mean, not their own.
    CHECK(test.inputs(0, 0) == doctest::Approx(3.0));
    CHECK(test.inputs(1, 0) == doctest::Approx(5.0));
    const MeanStd test_ms = mean_std(test.inputs);
    CHECK(test_ms.mean != doctest::Approx(0.0));
}

TEST_CASE("degenerate data is rejected") {
    const Matrix constant(3, 2, {5.0, 5.0, 5.0, 5.0, 5.0, 5.0});
    CHECK_THROWS_AS(fit_simple_norm(constant), DataError);
}

TEST_CASE("per-feature normalization standardizes each column") {
    Rng rng(6);
    Matrix inputs = random_matrix(100, 3, rng, 0.0, 1.0);
    for (std::size_t r = 0; r < inputs.rows(); ++r) inputs(r, 1) *= 10.0;
    const PerFeatureNormTransform t = fit_per_feature_norm(inputs);
    const Matrix out = apply_per_feature_norm(t, inputs);
    for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < out.rows(); ++r) {
            sum += out(r, c);
            sq += out(r, c) * out(r, c);
        }
        const double mean = sum / double(out.rows());
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(sq / double(out.rows()) - mean * mean - 1.0) < 1e-9);
    }
}

TEST_CASE("jacobi eigensolver recovers a known spectrum") {
    // A = Q diag(1, 4, 9) Q^T for a fixed rotation Q.
    const double c = std::cos(0.6), s = std::sin(0.6);
    Matrix q = identity(3);
    q(0, 0) = c;
    q(0, 1) = -s;
    q(1, 0) = s;
    q(1, 1) = c;
    Matrix d(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 4.0;
    d(2, 2) = 9.0;
    const Matrix a = matmul(matmul(q, d), transpose(q));

    const SymmetricEigen eig = jacobi_eigen_symmetric(a);
    CHECK(eig.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eig.eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(eig.eigenvalues[2] == doctest::Approx(9.0).epsilon(1e-10));

    // Reconstruction: U diag(l) U^T == A.
    Matrix recon(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                recon(i, j) +=
                    eig.eigenvectors(i, k) * eig.eigenvalues[k] * eig.eigenvectors(j, k);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(recon.data()[i] == doctest::Approx(a.data()[i]).epsilon(1e-9));
    }
}

TEST_CASE("zca whitening matrix is symmetric and near identity on white data") {
    Rng rng(7);
    const std::size_t n = 10000, d = 5;
    Matrix x(n, d);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(0.0, 1.0);

    const ZcaTransform t = zca_fit(x, 1e-5);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            CHECK(std::abs(t.whitening(i, j) - t.whitening(j, i)) < 1e-8);
            const double expected = i == j ? 1.0 : 0.0;
            CHECK(std::abs(t.whitening(i, j) - expected) < 0.05);
        }
    }
}

TEST_CASE("zca whitened fixture has a near-diagonal covariance") {
    // Fixed 4x3 fixture with well-spread eigenvalues; closed-form check:
    // W (C + rI) W == I, and the whitened covariance in feature space is
    // I - r W W with off-diagonals below 1e-6.
    const Matrix x(4, 3,
                   {10.0, 2.0, 1.0, -8.0, 6.0, -2.0, 3.0, -7.0, 9.0, -5.0, -1.0, -8.0});
    const double reg = 1e-5;
    const ZcaTransform t = zca_fit(x, reg);

    const Matrix white = zca_apply(t, x);
    Matrix cov(3, 3);
    std::vector<double> mean(3, 0.0);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) mean[c] += white(r, c) / 4.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                cov(i, j) += (white(r, i) - mean[i]) * (white(r, j) - mean[j]) / 4.0;

    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i != j) CHECK(std::abs(cov(i, j)) < 1e-6);
        }
        CHECK(cov(i, i) == doctest::Approx(1.0).epsilon(1e-3));
    }

    // W (C + rI) W = I exactly in exact arithmetic.
    Matrix centered(4, 3);
    std::vector<double> xmean(3, 0.0);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) xmean[c] += x(r, c) / 4.0;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) centered(r, c) = x(r, c) - xmean[c];
    Matrix covariance = scale(matmul_tn(centered, centered), 0.25);
    for (std::size_t i = 0; i < 3; ++i) covariance(i, i) += reg;
    const Matrix should_be_identity =
        matmul(matmul(t.whitening, covariance), t.whitening);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(should_be_identity(i, j) - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("zca apply does not mutate the fitted transform") {
    Rng rng(8);
    const Matrix x = random_matrix(20, 4, rng);
    const ZcaTransform t = zca_fit(x, 1e-4);
    const Matrix w_before = t.whitening;
    const std::vector<double> mean_before = t.mean;
    (void)zca_apply(t, x);
    CHECK(bit_identical(t.whitening, w_before));
    CHECK(t.mean == mean_before);
}

TEST_CASE("zca validates its preconditions") {
    CHECK_THROWS_AS(zca_fit(Matrix(1, 3), 1e-5), ConfigError);
    CHECK_THROWS_AS(zca_fit(Matrix(4, 3), 0.0), ConfigError);
    Rng rng(9);
    const ZcaTransform t = zca_fit(random_matrix(5, 3, rng), 1e-5);
    CHECK_THROWS_AS(zca_apply(t, Matrix(2, 4)), ShapeError);
}

TEST_CASE("transform sidecar round-trips every kind") {
    TempDir tmp;
    const auto path = tmp.path() / "transforms.abpt";

    Rng rng(10);
    FittedTransforms pipeline;
    pipeline.steps.emplace_back(Scale01Transform{});
    pipeline.steps.emplace_back(SimpleNormTransform{0.25, 1.5});
    PerFeatureNormTransform pf;
    pf.mean = {1.0, 2.0};
    pf.stddev = {0.5, 0.25};
    pipeline.steps.emplace_back(pf);
    pipeline.steps.emplace_back(zca_fit(random_matrix(6, 3, rng), 1e-4));

    save_transform_sidecar(path, 0xfeedbeefULL, pipeline);
    std::uint64_t hash = 0;
    const FittedTransforms loaded = load_transform_sidecar(path, &hash);
    CHECK(hash == 0xfeedbeefULL);
    REQUIRE(loaded.steps.size() == 4);
    CHECK(std::holds_alternative<Scale01Transform>(loaded.steps[0]));
    const auto& simple = std::get<SimpleNormTransform>(loaded.steps[1]);
    CHECK(simple.mean == 0.25);
    CHECK(simple.stddev == 1.5);
    const auto& pf2 = std::get<PerFeatureNormTransform>(loaded.steps[2]);
    CHECK(pf2.mean == pf.mean);
    CHECK(pf2.stddev == pf.stddev);
    const auto& zca1 = std::get<ZcaTransform>(pipeline.steps[3]);
    const auto& zca2 = std::get<ZcaTransform>(loaded.steps[3]);
    CHECK(zca2.regularizer == zca1.regularizer);
    CHECK(zca2.mean == zca1.mean);
    CHECK(bit_identical(zca2.whitening, zca1.whitening));
}

TEST_CASE("sidecar loader rejects a wrong magic") {
    TempDir tmp;
    const auto path = tmp.path() / "bad.abpt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE123456789";
    }
    CHECK_THROWS_AS(load_transform_sidecar(path), FormatError);
}
