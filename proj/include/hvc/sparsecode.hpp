#pragma once

#include <functional>

#include "hvc/common.hpp"

// Overcomplete sparse coding: basis A (L x M), codes inferred by gradient
// descent on
//
//   E = < |x - A s|^2 / 2 > + lambda * f(s)
//
// and the basis learned by gradient steps on E followed by unit-norm
// renormalization of its columns.
namespace hvc::sparsecode {

enum class Penalty { Abs, LogCosh };

const char* to_string(Penalty p);
Penalty penalty_from_string(const std::string& name);

struct DictionaryModel {
    Matrix basis;  // L x M, unit-norm columns
    double lambda = 0.0;
    Penalty penalty = Penalty::LogCosh;

    Index input_dim() const { return basis.rows(); }
    Index output_dim() const { return basis.cols(); }
};

inline constexpr int kInferSteps = 100;
inline constexpr double kInferRate = 0.01;

// f(s): sum |s_i| or sum log cosh(s_i).
double sparsity(Penalty penalty, const Vector& s);

// f'(s) elementwise: sign (with sign(0) = 0) or tanh.
double sparsity_derivative(Penalty penalty, double v);

// s0 = A^T x; s <- s + rate * (A^T (x - A s) - lambda f'(s)).
Vector infer(const DictionaryModel& model, const Vector& x, int steps = kInferSteps, double rate = kInferRate);

// Row-wise infer on N x L inputs.
RowMatrix infer_batch(const DictionaryModel& model, const RowMatrix& inputs, int steps = kInferSteps,
                      double rate = kInferRate);

// The canonical unit response used by the pipeline: infer with the defaults.
Vector respond(const DictionaryModel& model, const Vector& x);
RowMatrix respond_batch(const DictionaryModel& model, const RowMatrix& inputs);

// Mean over rows of |x - A s|^2 / 2 + lambda * f(s).
double objective(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes);

// dE/dA = -<(x - A s) s^T>.
Matrix basis_gradient(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes);

// dE/ds per row: -(A^T (x - A s) - lambda f'(s)) / N.
RowMatrix code_gradient(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes);

void normalize_columns(Matrix& basis);

// Gaussian entries, columns scaled to unit norm.
Matrix random_basis(Index input_dim, Index output_dim, Rng& rng);

struct TrainOptions {
    Index output_dim = 0;
    double lambda = 0.1;
    Penalty penalty = Penalty::LogCosh;
    int epochs = 1;
    double learning_rate = 0.1;
    int infer_steps = kInferSteps;
    double infer_rate = kInferRate;
};

struct EpochStats {
    int epoch = 0;
    double objective = 0.0;
    double max_second_moment = 0.0;  // max_i <s_i^2> over the batch codes
};

using BatchSource = std::function<RowMatrix(Rng&)>;
using EpochObserver = std::function<void(const EpochStats&)>;

DictionaryModel train(const BatchSource& source, Index input_dim, const TrainOptions& options, Rng& rng,
                      const EpochObserver& observer = {});

}  // namespace hvc::sparsecode
