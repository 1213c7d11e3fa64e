#include "hvc/gaussianize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hvc {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DegenerateInput("inverse_normal_cdf: p must lie in (0, 1)");

    // Acklam's rational approximation (relative error ~1e-9) ...
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double z;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // ... polished by Halley steps on Phi(z) - p. The upper tail is refined
    // through the complementary CDF to avoid cancellation.
    for (int it = 0; it < 2; ++it) {
        const double e = p > 0.5 ? (1.0 - p) - 0.5 * std::erfc(z / std::numbers::sqrt2) : normal_cdf(z) - p;
        const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
        z -= u / (1.0 + 0.5 * z * u);
    }
    return z;
}

Gaussianizer Gaussianizer::fit(const RowMatrix& responses) {
    if (responses.rows() < 2) throw DegenerateInput("Gaussianizer::fit: need at least two samples");
    if (!responses.allFinite()) throw DegenerateInput("Gaussianizer::fit: non-finite response");
    RowMatrix tables = responses.transpose().cwiseAbs();
    for (Index i = 0; i < tables.rows(); ++i) {
        auto row = tables.row(i);
        std::sort(row.begin(), row.end());
    }
    return Gaussianizer(std::move(tables));
}

Gaussianizer Gaussianizer::from_tables(RowMatrix tables) {
    if (tables.cols() < 2) throw DegenerateInput("Gaussianizer: tables need at least two samples");
    for (Index i = 0; i < tables.rows(); ++i) {
        const auto row = tables.row(i);
        if (!std::is_sorted(row.begin(), row.end()) || row.minCoeff() < 0.0 || !row.allFinite())
            throw IoError("Gaussianizer: table " + std::to_string(i) + " is not a sorted nonnegative array");
    }
    return Gaussianizer(std::move(tables));
}

double Gaussianizer::probability(Index dim, double value) const {
    const double v = std::abs(value);
    const auto row = tables_.row(dim);
    const double* first = row.data();
    const double* last = first + row.size();
    const double n = static_cast<double>(row.size());

    // k = #entries strictly less than v.
    const auto k = std::lower_bound(first, last, v) - first;
    if (k == 0) return 1.0 / (n + 1.0);
    if (k == row.size()) return n / (n + 1.0);
    const double lo = first[k - 1];
    const double hi = first[k];
    const double interp = (v - lo) / (hi - lo);  // hi >= v > lo
    return (static_cast<double>(k) + interp) / (n + 1.0);
}

Vector Gaussianizer::transform(const Vector& s) const {
    require_shape(s.size() == dims(), "Gaussianizer::transform: dimension mismatch");
    Vector out(s.size());
    for (Index i = 0; i < s.size(); ++i) out[i] = inverse_normal_cdf(probability(i, s[i]));
    return out;
}

RowMatrix Gaussianizer::transform_batch(const RowMatrix& s) const {
    require_shape(s.cols() == dims(), "Gaussianizer::transform: dimension mismatch");
    RowMatrix out(s.rows(), s.cols());
    for (Index n = 0; n < s.rows(); ++n)
        for (Index i = 0; i < s.cols(); ++i) out(n, i) = inverse_normal_cdf(probability(i, s(n, i)));
    return out;
}

}  // namespace hvc
