#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "hvc/common.hpp"
#include "hvc/imageio.hpp"

// Sparse PCA autoencoder: a decoder A (L x M, M <= L) minimizing
//
//   E = < |x - A s|^2 / 2 > + lambda * sum_ij |A_ij|   s.t.  <s_i^2> <= 1
//
// Training works through the correlation matrix C = <x x^T>: the
// reconstruction term is taken at the least-squares optimal code, so it only
// depends on span(A), and every column is held on the power surface
// a_i^T C a_i = 1 (the tied-encoding estimate of <s_i^2>). Gradient-descent
// inference of the code is available separately (infer).
namespace hvc::spca {

// C = <x x^T>, estimated from n_samples samples.
struct CorrelationMatrix {
    Matrix C;
    std::uint64_t n_samples = 0;

    Index dim() const { return C.rows(); }
};

// Exact running sum of outer products.
class CorrelationAccumulator {
public:
    explicit CorrelationAccumulator(Index dim);

    // Rows of `samples` are observations.
    void add(const RowMatrix& samples);
    CorrelationMatrix result() const;
    std::uint64_t n_samples() const { return n_; }

private:
    Matrix sum_;
    std::uint64_t n_ = 0;
};

CorrelationMatrix estimate_correlation(std::span<const PatchBatch> batches);

struct SpcaModel {
    Matrix decoder;      // L x M, columns are unit connection weights
    double lambda = 0.0;
    Matrix correlation;  // training-data C (L x L); empty if unknown

    Index input_dim() const { return decoder.rows(); }
    Index output_dim() const { return decoder.cols(); }
};

inline constexpr int kInferSteps = 100;
inline constexpr double kInferRate = 0.01;

// s0 = A^T x, then `steps` iterations of s <- s + rate * A^T (x - A s).
Vector infer(const SpcaModel& model, const Vector& x, int steps = kInferSteps, double rate = kInferRate);

// Row-wise infer for an N x L block of inputs; returns N x M.
RowMatrix infer_batch(const SpcaModel& model, const RowMatrix& inputs, int steps = kInferSteps,
                      double rate = kInferRate);

// Tied encoding s = A^T x per row.
RowMatrix encode_tied(const SpcaModel& model, const RowMatrix& inputs);

// Mean over rows of |x - A s|^2 / 2 plus lambda * |A|_1.
double objective(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes);

// dE/dA with the codes held fixed: -<(x - A s) s^T> + lambda * sign(A).
Matrix decoder_gradient(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes);

// dE/ds for every row of `codes` (N x M).
RowMatrix code_gradient(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes);

// 1/2 tr[(I - AA^T) C (I - AA^T)^T] + lambda * |A|_1: the objective under the
// tied encoding written through C alone.
double objective_from_corr(const SpcaModel& model, const Matrix& C);

// Exact gradient of objective_from_corr with respect to A.
Matrix objective_from_corr_gradient(const SpcaModel& model, const Matrix& C);

// Reconstruction term at the least-squares optimal code s* = argmin |x - As|:
// 1/2 tr[(I - P) C] with P the orthogonal projector onto span(A).
double optimal_reconstruction(const SpcaModel& model, const Matrix& C);

// a_i^T C a_i per column: the tied-encoding estimate of <s_i^2>.
Vector second_moments(const SpcaModel& model, const Matrix& C);

// Rescales every nonzero column onto the power surface a_i^T C a_i = 1.
void normalize_power(Matrix& decoder, const Matrix& C);

// Training objective: optimal_reconstruction + lambda * |A|_1.
double training_objective(const SpcaModel& model, const Matrix& C);

struct TrainOptions {
    Index output_dim = 0;
    double lambda = 0.01;
    int epochs = 1;
    double learning_rate = 4e-3;
};

struct EpochStats {
    int epoch = 0;
    double objective = 0.0;
    double max_second_moment = 0.0;
};

// Produces one N x L batch of training inputs per call.
using BatchSource = std::function<RowMatrix(Rng&)>;
using EpochObserver = std::function<void(const EpochStats&)>;

// One update against C, assuming the columns already satisfy a_i^T C a_i = 1:
//
//   A <- A + lr * [ (I - P) C A  -  lambda * (sign(A) - C A diag(|a_i|_1)) ]
//
// then normalize_power. The first term is the reconstruction gradient at the
// optimal code, -(I - P) C A (A^T A)^-1, right-preconditioned by A^T A. The
// second is the L1 gradient restricted to the power surface.
void gradient_step(Matrix& decoder, const Matrix& C, double lambda, double learning_rate);

// Streaming training: each epoch draws a batch from `source`, folds it into
// the exact running correlation of all data seen so far, and takes one
// gradient_step against it. The returned model caches that correlation.
SpcaModel train(const BatchSource& source, Index input_dim, const TrainOptions& options, Rng& rng,
                const EpochObserver& observer = {});

// The same update against a fixed correlation matrix.
SpcaModel train_from_correlation(const CorrelationMatrix& corr, const TrainOptions& options, Rng& rng,
                                 const EpochObserver& observer = {});

// I.i.d. N(0, 1/L) entries.
Matrix random_decoder(Index input_dim, Index output_dim, Rng& rng);

}  // namespace hvc::spca
