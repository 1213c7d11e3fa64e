#include "hvc/spca.hpp"

#include <cmath>

#include "hvc/parallel.hpp"

namespace hvc::spca {

namespace {

constexpr std::size_t kRowChunk = 32;

Matrix sign_of(const Matrix& m) {
    return m.unaryExpr([](double v) { return hvc::sign(v); });
}

void check_inputs(const SpcaModel& model, const RowMatrix& inputs, const char* what) {
    require_shape(inputs.cols() == model.input_dim(), std::string(what) + ": input dim mismatch");
}

void check_codes(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes, const char* what) {
    check_inputs(model, inputs, what);
    require_shape(codes.rows() == inputs.rows() && codes.cols() == model.output_dim(),
                  std::string(what) + ": code shape mismatch");
}

void check_corr(const SpcaModel& model, const Matrix& C, const char* what) {
    require_shape(C.rows() == model.input_dim() && C.cols() == model.input_dim(),
                  std::string(what) + ": correlation dim mismatch");
}

}  // namespace

CorrelationAccumulator::CorrelationAccumulator(Index dim) : sum_(Matrix::Zero(dim, dim)) {}

void CorrelationAccumulator::add(const RowMatrix& samples) {
    require_shape(samples.cols() == sum_.rows(), "estimate_correlation: dimension mismatch across batches");
    sum_.noalias() += samples.transpose() * samples;
    n_ += static_cast<std::uint64_t>(samples.rows());
}

CorrelationMatrix CorrelationAccumulator::result() const {
    if (n_ == 0) throw DegenerateInput("estimate_correlation: no samples");
    Matrix C = sum_ / static_cast<double>(n_);
    // Symmetric by construction up to GEMM rounding; make it exact.
    C = 0.5 * (C + C.transpose()).eval();
    return {std::move(C), n_};
}

CorrelationMatrix estimate_correlation(std::span<const PatchBatch> batches) {
    if (batches.empty()) throw DegenerateInput("estimate_correlation: no samples");
    CorrelationAccumulator acc(batches.front().dim());
    for (const auto& b : batches) acc.add(b.data);
    return acc.result();
}

Vector infer(const SpcaModel& model, const Vector& x, int steps, double rate) {
    require_shape(x.size() == model.input_dim(), "spca::infer: input dim mismatch");
    const Matrix& A = model.decoder;
    const Vector drive = A.transpose() * x;
    const Matrix gram = A.transpose() * A;
    Vector s = drive;
    // A^T (x - A s) = A^T x - (A^T A) s
    for (int k = 0; k < steps; ++k) s.noalias() += rate * (drive - gram * s);
    return s;
}

RowMatrix infer_batch(const SpcaModel& model, const RowMatrix& inputs, int steps, double rate) {
    check_inputs(model, inputs, "spca::infer_batch");
    const Matrix& A = model.decoder;
    const Matrix gram = A.transpose() * A;
    RowMatrix codes(inputs.rows(), model.output_dim());
    parallel_chunks(static_cast<std::size_t>(inputs.rows()), kRowChunk, [&](std::size_t b, std::size_t e) {
        const auto rows = static_cast<Index>(e - b);
        const RowMatrix drive = inputs.middleRows(static_cast<Index>(b), rows) * A;
        RowMatrix s = drive;
        for (int k = 0; k < steps; ++k) s.noalias() += rate * (drive - s * gram);
        codes.middleRows(static_cast<Index>(b), rows) = s;
    });
    return codes;
}

RowMatrix encode_tied(const SpcaModel& model, const RowMatrix& inputs) {
    check_inputs(model, inputs, "spca::encode_tied");
    return inputs * model.decoder;
}

double objective(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "spca::objective");
    const RowMatrix residual = inputs - codes * model.decoder.transpose();
    const double n = static_cast<double>(inputs.rows());
    return 0.5 * residual.squaredNorm() / n + model.lambda * model.decoder.cwiseAbs().sum();
}

Matrix decoder_gradient(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "spca::decoder_gradient");
    const RowMatrix residual = inputs - codes * model.decoder.transpose();
    const double n = static_cast<double>(inputs.rows());
    return -(residual.transpose() * codes) / n + model.lambda * sign_of(model.decoder);
}

RowMatrix code_gradient(const SpcaModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "spca::code_gradient");
    const RowMatrix residual = inputs - codes * model.decoder.transpose();
    const double n = static_cast<double>(inputs.rows());
    return -(residual * model.decoder) / n;
}

double objective_from_corr(const SpcaModel& model, const Matrix& C) {
    check_corr(model, C, "spca::objective_from_corr");
    const Matrix& A = model.decoder;
    const Index L = A.rows();
    const Matrix residual_map = Matrix::Identity(L, L) - A * A.transpose();
    const double recon = 0.5 * (residual_map * C * residual_map.transpose()).trace();
    return recon + model.lambda * A.cwiseAbs().sum();
}

Matrix objective_from_corr_gradient(const SpcaModel& model, const Matrix& C) {
    check_corr(model, C, "spca::objective_from_corr_gradient");
    const Matrix& A = model.decoder;
    // d/dA of 1/2 [tr C - 2 tr(AA^T C) + tr(AA^T C AA^T)] for symmetric C.
    const Matrix CA = C * A;
    const Matrix AtA = A.transpose() * A;
    const Matrix AtCA = A.transpose() * CA;
    return -2.0 * CA + CA * AtA + A * AtCA + model.lambda * sign_of(A);
}

double optimal_reconstruction(const SpcaModel& model, const Matrix& C) {
    check_corr(model, C, "spca::optimal_reconstruction");
    Eigen::BDCSVD<Matrix> svd(model.decoder, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double tol = sv.size() ? sv[0] * 1e-12 * static_cast<double>(model.decoder.rows()) : 0.0;
    Index rank = 0;
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    const Matrix U = svd.matrixU().leftCols(rank);
    return 0.5 * (C.trace() - (U.transpose() * C * U).trace());
}

Vector second_moments(const SpcaModel& model, const Matrix& C) {
    check_corr(model, C, "spca::second_moments");
    const Matrix& A = model.decoder;
    return (A.transpose() * C).cwiseProduct(A.transpose()).rowwise().sum();
}

void normalize_power(Matrix& decoder, const Matrix& C) {
    const Matrix CA = C * decoder;
    for (Index i = 0; i < decoder.cols(); ++i) {
        const double power = decoder.col(i).dot(CA.col(i));
        if (power > 0.0) decoder.col(i) /= std::sqrt(power);
    }
}

double training_objective(const SpcaModel& model, const Matrix& C) {
    return optimal_reconstruction(model, C) + model.lambda * model.decoder.cwiseAbs().sum();
}

Matrix random_decoder(Index input_dim, Index output_dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
    Matrix A(input_dim, output_dim);
    // Column-major fill order is part of the determinism contract.
    for (Index j = 0; j < output_dim; ++j)
        for (Index i = 0; i < input_dim; ++i) A(i, j) = normal(rng);
    return A;
}

void gradient_step(Matrix& decoder, const Matrix& C, double lambda, double learning_rate) {
    Matrix& A = decoder;
    require_shape(C.rows() == A.rows() && C.cols() == A.rows(), "spca::gradient_step: correlation dim mismatch");
    const Index M = A.cols();
    Matrix gram = A.transpose() * A;
    gram.diagonal().array() += 1e-12 * gram.trace() / static_cast<double>(M);
    const Matrix CA = C * A;
    // (I - P) C A with P = A (A^T A)^-1 A^T.
    Matrix step = CA - A * gram.ldlt().solve(A.transpose() * CA);
    if (lambda > 0.0) {
        Matrix l1 = sign_of(A);
        for (Index i = 0; i < M; ++i) l1.col(i) -= A.col(i).cwiseAbs().sum() * CA.col(i);
        step -= lambda * l1;
    }
    A.noalias() += learning_rate * step;
    if (!A.allFinite()) throw NumericError("spca: non-finite decoder update (learning rate too large?)");
    normalize_power(A, C);
}

namespace {

void validate(const TrainOptions& o, Index input_dim) {
    if (o.output_dim < 1 || o.output_dim > input_dim)
        throw ShapeError("spca::train: output dim must be in [1, input dim]");
    if (o.epochs < 1) throw ShapeError("spca::train: epochs must be >= 1");
    if (!(o.lambda >= 0.0)) throw ShapeError("spca::train: lambda must be >= 0");
    if (!(o.learning_rate > 0.0)) throw ShapeError("spca::train: learning rate must be > 0");
}

}  // namespace

SpcaModel train(const BatchSource& source, Index input_dim, const TrainOptions& options, Rng& rng,
                const EpochObserver& observer) {
    validate(options, input_dim);
    SpcaModel model{random_decoder(input_dim, options.output_dim, rng), options.lambda, {}};
    CorrelationAccumulator running(input_dim);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const RowMatrix inputs = source(rng);
        require_shape(inputs.cols() == input_dim && inputs.rows() > 0, "spca::train: batch shape mismatch");
        running.add(inputs);
        const Matrix C = running.result().C;
        if (epoch == 0) normalize_power(model.decoder, C);
        if (observer) observer({epoch, training_objective(model, C), second_moments(model, C).maxCoeff()});
        gradient_step(model.decoder, C, options.lambda, options.learning_rate);
    }
    model.correlation = running.result().C;
    normalize_power(model.decoder, model.correlation);
    return model;
}

SpcaModel train_from_correlation(const CorrelationMatrix& corr, const TrainOptions& options, Rng& rng,
                                 const EpochObserver& observer) {
    const Index L = corr.dim();
    validate(options, L);
    SpcaModel model{random_decoder(L, options.output_dim, rng), options.lambda, corr.C};
    normalize_power(model.decoder, corr.C);
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        if (observer)
            observer({epoch, training_objective(model, corr.C), second_moments(model, corr.C).maxCoeff()});
        gradient_step(model.decoder, corr.C, options.lambda, options.learning_rate);
    }
    return model;
}

}  // namespace hvc::spca
