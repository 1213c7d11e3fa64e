#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hvc/gaussianize.hpp"
#include "oracles.hpp"

using namespace hvc;

TEST_SUITE("gaussianize") {

TEST_CASE("inverse_normal_cdf reference values") {
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    CHECK(std::abs(inverse_normal_cdf(0.975) - 1.9599640) < 1e-6);
    CHECK(std::abs(inverse_normal_cdf(0.4) - (-0.2533471)) < 1e-6);
    // Powers of two keep 1 - p exact.
    for (double p : {0x1p-27, 0x1p-17, 0x1p-7, 0.25, 0.375}) {
        CHECK(std::abs(inverse_normal_cdf(p) + inverse_normal_cdf(1 - p)) < 1e-12);
    }
    for (double p : {1e-8, 1e-5, 0.01, 0.2, 0.4999}) CHECK(std::abs(inverse_normal_cdf(p) - oracle::inverse_normal_cdf(p)) < 1e-8);
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), DegenerateInput);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), DegenerateInput);
    CHECK_THROWS_AS(inverse_normal_cdf(std::nan("")), DegenerateInput);
}

TEST_CASE("inverse_normal_cdf round trip on a dense grid") {
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        const double p = 1e-8 + (1 - 2e-8) * i / 9999.0;
        const double z = inverse_normal_cdf(p);
        worst = std::max(worst, static_cast<double>(std::fabs(oracle::normal_cdf(z) - p)));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("fit sorts magnitudes per column") {
    RowMatrix r(3, 2);
    r << -3, 5, 1, 5, 2, 5;
    const Gaussianizer g = Gaussianizer::fit(r);
    CHECK(g.dims() == 2);
    CHECK(g.samples() == 3);
    CHECK(g.tables().row(0) == Eigen::RowVector3d(1, 2, 3));
    CHECK(g.tables().row(1) == Eigen::RowVector3d(5, 5, 5));
    CHECK(Gaussianizer::fit(-r).tables() == g.tables());
    CHECK_THROWS_AS(Gaussianizer::fit(RowMatrix::Ones(1, 2)), DegenerateInput);
}

TEST_CASE("transform follows the plotting position") {
    RowMatrix t(1, 4);
    t << 1, 2, 3, 4;
    const Gaussianizer g = Gaussianizer::fit(t.transpose());
    CHECK(g.probability(0, 2.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(std::abs(g.transform(Vector::Constant(1, 2.0))[0] - (-0.2533471)) < 1e-6);
    CHECK(g.probability(0, 2.5) == doctest::Approx(2.5 / 5).epsilon(1e-15));
    CHECK(g.probability(0, 0.0) == doctest::Approx(0.2));
    CHECK(g.probability(0, 1e9) == doctest::Approx(0.8));
    CHECK(g.transform(Vector::Constant(1, -2.0)) == g.transform(Vector::Constant(1, 2.0)));

    RowMatrix odd(5, 1);
    odd << 0.1, 0.7, 0.3, 2.0, 0.5;
    const Gaussianizer h = Gaussianizer::fit(odd);
    CHECK(std::abs(h.transform(Vector::Constant(1, 0.5))[0]) < 1e-9);
}

TEST_CASE("ties share one probability and outputs stay finite") {
    RowMatrix r(4, 1);
    r << 1, 1, 1, 1;
    const Gaussianizer g = Gaussianizer::fit(r);
    for (double v : {0.0, 0.5, 1.0, 2.0, 1e300}) CHECK(std::isfinite(g.transform(Vector::Constant(1, v))[0]));
}

TEST_CASE("self-transform is standard normal and monotone") {
    Rng rng(99);
    std::student_t_distribution<double> heavy(2.0);
    std::exponential_distribution<double> expo(1.0);
    RowMatrix s(10000, 3);
    for (Index n = 0; n < s.rows(); ++n) {
        s(n, 0) = heavy(rng);
        s(n, 1) = expo(rng) * expo(rng);
        s(n, 2) = std::pow(heavy(rng), 3);
    }
    const Gaussianizer g = Gaussianizer::fit(s);
    const RowMatrix z = g.transform_batch(s);
    REQUIRE(z.allFinite());
    for (Index i = 0; i < 3; ++i) {
        const double mean = z.col(i).mean();
        const double var = (z.col(i).array() - mean).square().mean();
        CHECK(std::abs(mean) <= 0.05);
        CHECK(var >= 0.9);
        CHECK(var <= 1.1);
        std::vector<std::pair<double, double>> pairs;
        for (Index n = 0; n < s.rows(); ++n) pairs.emplace_back(std::abs(s(n, i)), z(n, i));
        std::sort(pairs.begin(), pairs.end());
        bool monotone = true;
        for (std::size_t k = 1; k < pairs.size(); ++k) monotone = monotone && pairs[k - 1].second <= pairs[k].second;
        CHECK(monotone);
    }
}

TEST_CASE("only rank order matters on the fitted data") {
    Rng rng(12);
    const RowMatrix s = testing::gaussian_rows(501, 4, rng);
    const RowMatrix sq = s.array().square();
    const Gaussianizer a = Gaussianizer::fit(s);
    const Gaussianizer b = Gaussianizer::fit(sq);
    CHECK(a.transform_batch(s) == b.transform_batch(sq));
}

TEST_CASE("from_tables validates") {
    RowMatrix ok(1, 3);
    ok << 0, 1, 2;
    CHECK(Gaussianizer::from_tables(ok).dims() == 1);
    RowMatrix unsorted(1, 3);
    unsorted << 0, 2, 1;
    CHECK_THROWS_AS(Gaussianizer::from_tables(unsorted), IoError);
    RowMatrix negative(1, 2);
    negative << -1, 1;
    CHECK_THROWS_AS(Gaussianizer::from_tables(negative), IoError);
    CHECK_THROWS_AS(Gaussianizer::from_tables(RowMatrix::Zero(2, 1)), DegenerateInput);
}

}
