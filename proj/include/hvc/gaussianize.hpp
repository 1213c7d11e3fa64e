#pragma once

#include "hvc/common.hpp"

namespace hvc {

// Standard normal CDF.
double normal_cdf(double z);

// Inverse of normal_cdf on (0, 1), |normal_cdf(z) - p| <= 1e-9. Throws
// DegenerateInput outside the open interval.
double inverse_normal_cdf(double p);

// Coordinate-wise map |s_i| -> Phi^-1(empirical cdf of |s_i|), fitted
// non-parametrically from N response vectors.
class Gaussianizer {
public:
    Gaussianizer() = default;

    // responses: N x M, N >= 2. Table i holds sorted |responses(:, i)|.
    static Gaussianizer fit(const RowMatrix& responses);

    // Rebuilds from stored tables (rows = dims, each row ascending).
    static Gaussianizer from_tables(RowMatrix tables);

    Index dims() const { return tables_.rows(); }
    Index samples() const { return tables_.cols(); }
    const RowMatrix& tables() const { return tables_; }

    // Plotting position of |value| within table `dim`: (k + interp) / (N + 1),
    // clamped to [1/(N+1), N/(N+1)].
    double probability(Index dim, double value) const;

    Vector transform(const Vector& s) const;
    RowMatrix transform_batch(const RowMatrix& s) const;

private:
    explicit Gaussianizer(RowMatrix tables) : tables_(std::move(tables)) {}

    RowMatrix tables_;
};

}  // namespace hvc
