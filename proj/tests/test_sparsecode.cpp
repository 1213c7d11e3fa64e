#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "hvc/sparsecode.hpp"
#include "oracles.hpp"

using namespace hvc;
using sparsecode::DictionaryModel;
using sparsecode::Penalty;

TEST_SUITE("sparsecode") {

TEST_CASE("sparsity values") {
    CHECK(sparsecode::sparsity(Penalty::Abs, Vector::Zero(3)) == 0.0);
    CHECK(sparsecode::sparsity(Penalty::LogCosh, Vector::Zero(3)) == 0.0);
    Vector s(2);
    s << 1, -2;
    CHECK(sparsecode::sparsity(Penalty::Abs, s) == 3.0);
    const Vector ten = Vector::Constant(1, 10.0);
    CHECK(std::abs(sparsecode::sparsity(Penalty::LogCosh, ten) - static_cast<double>(oracle::logcosh(10.0L))) < 1e-12);
    CHECK(std::abs(sparsecode::sparsity(Penalty::LogCosh, ten) - (10 - std::log(2.0))) < 1e-6);
    CHECK(std::isfinite(sparsecode::sparsity(Penalty::LogCosh, Vector::Constant(1, 1e6))));
    CHECK(sparsecode::penalty_from_string("abs") == Penalty::Abs);
    CHECK_THROWS_AS(sparsecode::penalty_from_string("l2"), ShapeError);
}

TEST_CASE("infer: origin, orthonormal complete basis, soft threshold") {
    Rng rng(2);
    DictionaryModel m{sparsecode::random_basis(4, 6, rng), 0.5, Penalty::Abs};
    CHECK(sparsecode::infer(m, Vector::Zero(4)).isZero(0.0));
    m.penalty = Penalty::LogCosh;
    CHECK(sparsecode::infer(m, Vector::Zero(4)).isZero(0.0));

    Matrix Q = Eigen::HouseholderQR<Matrix>(Matrix::Random(3, 3)).householderQ();
    DictionaryModel ortho{Q, 0.0, Penalty::LogCosh};
    const Vector x = Vector::Random(3);
    CHECK((sparsecode::infer(ortho, x) - Q.transpose() * x).norm() < 1e-12);

    DictionaryModel scalar{Matrix::Constant(1, 1, 1.0), 1.0, Penalty::Abs};
    const double s = sparsecode::infer(scalar, Vector::Constant(1, 3.0), 1000, 0.05)[0];
    CHECK(std::abs(s - oracle::soft_threshold(3.0, 1.0)) < 1e-3);
}

TEST_CASE("respond is infer with the defaults, bit for bit") {
    Rng rng(3);
    DictionaryModel m{sparsecode::random_basis(5, 9, rng), 0.2, Penalty::LogCosh};
    const RowMatrix X = testing::gaussian_rows(40, 5, rng);
    for (Index n = 0; n < 3; ++n) {
        const Vector x = X.row(n).transpose();
        CHECK(sparsecode::respond(m, x) == sparsecode::infer(m, x, 100, 0.01));
        CHECK(sparsecode::respond(m, x) == sparsecode::respond(m, x));
    }
    CHECK(sparsecode::respond_batch(m, X) == sparsecode::infer_batch(m, X, 100, 0.01));
    CHECK(sparsecode::respond(m, Vector::Zero(5)).isZero(0.0));
    const RowMatrix S = sparsecode::respond_batch(m, X);
    CHECK((S.row(7).transpose() - sparsecode::respond(m, X.row(7).transpose())).norm() < 1e-12);
}

TEST_CASE("objective examples") {
    Rng rng(4);
    DictionaryModel m{sparsecode::random_basis(3, 5, rng), 0.4, Penalty::LogCosh};
    const RowMatrix X = testing::gaussian_rows(8, 3, rng);
    CHECK(sparsecode::objective(m, X, RowMatrix::Zero(8, 5)) ==
          doctest::Approx(0.5 * X.rowwise().squaredNorm().mean()));

    DictionaryModel scalar{Matrix::Constant(1, 1, 1.0), 1.0, Penalty::Abs};
    CHECK(sparsecode::objective(scalar, RowMatrix::Constant(1, 1, 3.0), RowMatrix::Constant(1, 1, 2.0)) == 2.5);

    DictionaryModel id{Matrix::Identity(3, 3), 0.0, Penalty::Abs};
    CHECK(sparsecode::objective(id, X, X) == 0.0);
}

TEST_CASE("basis and code gradients match finite differences (logcosh)") {
    Rng rng(200);
    for (int trial = 0; trial < 20; ++trial) {
        const Index L = std::uniform_int_distribution<Index>(1, 10)(rng);
        const Index M = std::uniform_int_distribution<Index>(L, 12)(rng);
        const double lambda = 0.3;
        const RowMatrix X = testing::gaussian_rows(5, L, rng);
        const RowMatrix S = testing::gaussian_rows(5, M, rng);
        DictionaryModel m{testing::gaussian_rows(L, M, rng), lambda, Penalty::LogCosh};

        const Matrix gA = sparsecode::basis_gradient(m, X, S);
        const Matrix fdA = oracle::central_difference<Matrix>(
            [&](const Matrix& A) { return oracle::dict_objective_logcosh(A, lambda, X, S); }, m.basis, 1e-5);
        CHECK(oracle::max_relative_error(gA.array(), fdA.array()) < 1e-6);

        const RowMatrix gS = sparsecode::code_gradient(m, X, S);
        const RowMatrix fdS = oracle::central_difference<RowMatrix>(
            [&](const RowMatrix& s) { return oracle::dict_objective_logcosh(m.basis, lambda, X, s); }, S, 1e-5);
        CHECK(oracle::max_relative_error(gS.array(), fdS.array()) < 1e-6);
    }
}

TEST_CASE("abs-penalty code gradient away from zero") {
    Rng rng(201);
    DictionaryModel m{testing::gaussian_rows(4, 6, rng), 0.7, Penalty::Abs};
    const RowMatrix X = testing::gaussian_rows(3, 4, rng);
    RowMatrix S = testing::gaussian_rows(3, 6, rng);
    S = S.unaryExpr([](double v) { return v + (v >= 0 ? 0.5 : -0.5); });
    const RowMatrix gS = sparsecode::code_gradient(m, X, S);
    const RowMatrix fdS = oracle::central_difference<RowMatrix>(
        [&](const RowMatrix& s) { return sparsecode::objective(m, X, s); }, S, 1e-5);
    CHECK(oracle::max_relative_error(gS.array(), fdS.array()) < 1e-6);
}

TEST_CASE("inference does not increase the objective at small rates") {
    Rng rng(300);
    for (int trial = 0; trial < 10; ++trial) {
        DictionaryModel m{sparsecode::random_basis(6, 10, rng), 0.2, Penalty::LogCosh};
        const RowMatrix X = testing::gaussian_rows(1, 6, rng);
        double prev = sparsecode::objective(m, X, sparsecode::infer_batch(m, X, 0, 1e-3));
        for (int k = 1; k <= 20; ++k) {
            const double cur = sparsecode::objective(m, X, sparsecode::infer_batch(m, X, k, 1e-3));
            CHECK(cur <= prev + 1e-14 * std::abs(prev));
            prev = cur;
        }
    }
}

TEST_CASE("objective is invariant under a joint permutation of columns and codes") {
    Rng rng(5);
    DictionaryModel m{sparsecode::random_basis(4, 7, rng), 0.3, Penalty::LogCosh};
    const RowMatrix X = testing::gaussian_rows(6, 4, rng);
    const RowMatrix S = testing::gaussian_rows(6, 7, rng);
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DictionaryModel pm = m;
    RowMatrix PS(6, 7);
    for (int j = 0; j < 7; ++j) {
        pm.basis.col(j) = m.basis.col(perm[j]);
        PS.col(j) = S.col(perm[j]);
    }
    CHECK(sparsecode::objective(pm, X, PS) == doctest::Approx(sparsecode::objective(m, X, S)).epsilon(1e-13));
}

TEST_CASE("training keeps unit columns and recovers a planted dictionary") {
    Matrix truth(2, 4);
    const double pi = std::acos(-1.0);
    for (int j = 0; j < 4; ++j) truth.col(j) << std::cos(j * pi / 4 + 0.2), std::sin(j * pi / 4 + 0.2);
    auto source = [&](Rng& r) {
        std::uniform_int_distribution<int> atom(0, 3);
        std::uniform_real_distribution<double> mag(1.0, 3.0);
        std::bernoulli_distribution flip(0.5);
        RowMatrix X(64, 2);
        for (int n = 0; n < 64; ++n) X.row(n) = (flip(r) ? -1.0 : 1.0) * mag(r) * truth.col(atom(r)).transpose();
        return X;
    };
    sparsecode::TrainOptions opt;
    opt.output_dim = 4;
    opt.lambda = 0.5;
    opt.penalty = Penalty::Abs;
    opt.epochs = 3000;
    opt.learning_rate = 0.1;
    Rng rng(17);
    const DictionaryModel m = sparsecode::train(source, 2, opt, rng);
    CHECK(((m.basis.colwise().norm().array() - 1.0).abs() < 1e-10).all());
    for (int j = 0; j < 4; ++j) {
        const double best = (m.basis.transpose() * truth.col(j)).cwiseAbs().maxCoeff();
        CHECK(best > 0.95);
    }
}

TEST_CASE("complete basis reconstructs Gaussian data") {
    Rng rng(8);
    auto source = [](Rng& r) { return testing::gaussian_rows(64, 3, r); };
    sparsecode::TrainOptions opt;
    opt.output_dim = 3;
    opt.lambda = 0.0;
    opt.epochs = 300;
    const DictionaryModel m = sparsecode::train(source, 3, opt, rng);
    const RowMatrix X = source(rng);
    const RowMatrix S = sparsecode::respond_batch(m, X);
    const double recon = 0.5 * (X - S * m.basis.transpose()).rowwise().squaredNorm().mean();
    CHECK(recon < 1e-2 * 0.5 * X.rowwise().squaredNorm().mean());
}

TEST_CASE("training is deterministic") {
    auto source = [](Rng& r) { return testing::gaussian_rows(16, 4, r); };
    sparsecode::TrainOptions opt;
    opt.output_dim = 6;
    opt.epochs = 20;
    Rng a(1), b(1);
    CHECK(sparsecode::train(source, 4, opt, a).basis == sparsecode::train(source, 4, opt, b).basis);
    opt.output_dim = 0;
    CHECK_THROWS_AS(sparsecode::train(source, 4, opt, a), ShapeError);
}

}
