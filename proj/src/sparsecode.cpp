#include "hvc/sparsecode.hpp"

#include <cmath>

#include "hvc/parallel.hpp"

namespace hvc::sparsecode {

namespace {

constexpr std::size_t kRowChunk = 32;

double log_cosh(double v) {
    const double a = std::abs(v);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

RowMatrix derivative_of(Penalty penalty, const RowMatrix& s) {
    if (penalty == Penalty::Abs) return s.unaryExpr([](double v) { return hvc::sign(v); });
    return s.array().tanh().matrix();
}

void check_codes(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes, const char* what) {
    require_shape(inputs.cols() == model.input_dim(), std::string(what) + ": input dim mismatch");
    require_shape(codes.rows() == inputs.rows() && codes.cols() == model.output_dim(),
                  std::string(what) + ": code shape mismatch");
}

}  // namespace

const char* to_string(Penalty p) { return p == Penalty::Abs ? "abs" : "logcosh"; }

Penalty penalty_from_string(const std::string& name) {
    if (name == "abs") return Penalty::Abs;
    if (name == "logcosh") return Penalty::LogCosh;
    throw ShapeError("unknown sparsity penalty '" + name + "'");
}

double sparsity(Penalty penalty, const Vector& s) {
    if (penalty == Penalty::Abs) return s.cwiseAbs().sum();
    double total = 0.0;
    for (Index i = 0; i < s.size(); ++i) total += log_cosh(s[i]);
    return total;
}

double sparsity_derivative(Penalty penalty, double v) {
    return penalty == Penalty::Abs ? hvc::sign(v) : std::tanh(v);
}

Vector infer(const DictionaryModel& model, const Vector& x, int steps, double rate) {
    require_shape(x.size() == model.input_dim(), "sparsecode::infer: input dim mismatch");
    const Matrix& A = model.basis;
    const Vector drive = A.transpose() * x;
    const Matrix gram = A.transpose() * A;
    Vector s = drive;
    for (int k = 0; k < steps; ++k) {
        Vector shrink = s.unaryExpr([&](double v) { return sparsity_derivative(model.penalty, v); });
        s.noalias() += rate * (drive - gram * s - model.lambda * shrink);
    }
    if (!s.allFinite()) throw NumericError("sparsecode::infer: non-finite iterate (rate too large?)");
    return s;
}

RowMatrix infer_batch(const DictionaryModel& model, const RowMatrix& inputs, int steps, double rate) {
    require_shape(inputs.cols() == model.input_dim(), "sparsecode::infer_batch: input dim mismatch");
    const Matrix& A = model.basis;
    const Matrix gram = A.transpose() * A;
    RowMatrix codes(inputs.rows(), model.output_dim());
    parallel_chunks(static_cast<std::size_t>(inputs.rows()), kRowChunk, [&](std::size_t b, std::size_t e) {
        const auto rows = static_cast<Index>(e - b);
        const RowMatrix drive = inputs.middleRows(static_cast<Index>(b), rows) * A;
        RowMatrix s = drive;
        for (int k = 0; k < steps; ++k) {
            const RowMatrix shrink = derivative_of(model.penalty, s);
            s.noalias() += rate * (drive - s * gram - model.lambda * shrink);
        }
        codes.middleRows(static_cast<Index>(b), rows) = s;
    });
    if (!codes.allFinite()) throw NumericError("sparsecode::infer: non-finite iterate (rate too large?)");
    return codes;
}

Vector respond(const DictionaryModel& model, const Vector& x) { return infer(model, x, kInferSteps, kInferRate); }

RowMatrix respond_batch(const DictionaryModel& model, const RowMatrix& inputs) {
    return infer_batch(model, inputs, kInferSteps, kInferRate);
}

double objective(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "sparsecode::objective");
    const RowMatrix residual = inputs - codes * model.basis.transpose();
    double penalty = 0.0;
    for (Index n = 0; n < codes.rows(); ++n) penalty += sparsity(model.penalty, codes.row(n).transpose());
    const double count = static_cast<double>(inputs.rows());
    return (0.5 * residual.squaredNorm() + model.lambda * penalty) / count;
}

Matrix basis_gradient(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "sparsecode::basis_gradient");
    const RowMatrix residual = inputs - codes * model.basis.transpose();
    return -(residual.transpose() * codes) / static_cast<double>(inputs.rows());
}

RowMatrix code_gradient(const DictionaryModel& model, const RowMatrix& inputs, const RowMatrix& codes) {
    check_codes(model, inputs, codes, "sparsecode::code_gradient");
    const RowMatrix residual = inputs - codes * model.basis.transpose();
    const RowMatrix shrink = derivative_of(model.penalty, codes);
    return -(residual * model.basis - model.lambda * shrink) / static_cast<double>(inputs.rows());
}

void normalize_columns(Matrix& basis) {
    for (Index j = 0; j < basis.cols(); ++j) {
        const double n = basis.col(j).norm();
        if (n > 0.0) basis.col(j) /= n;
    }
}

Matrix random_basis(Index input_dim, Index output_dim, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix A(input_dim, output_dim);
    for (Index j = 0; j < output_dim; ++j)
        for (Index i = 0; i < input_dim; ++i) A(i, j) = normal(rng);
    normalize_columns(A);
    return A;
}

DictionaryModel train(const BatchSource& source, Index input_dim, const TrainOptions& options, Rng& rng,
                      const EpochObserver& observer) {
    if (options.output_dim < 1) throw ShapeError("sparsecode::train: output dim must be >= 1");
    if (options.epochs < 1) throw ShapeError("sparsecode::train: epochs must be >= 1");
    DictionaryModel model{random_basis(input_dim, options.output_dim, rng), options.lambda, options.penalty};

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const RowMatrix inputs = source(rng);
        require_shape(inputs.cols() == input_dim && inputs.rows() > 0, "sparsecode::train: batch shape mismatch");
        const RowMatrix codes = infer_batch(model, inputs, options.infer_steps, options.infer_rate);
        const RowMatrix residual = inputs - codes * model.basis.transpose();
        if (observer) {
            const double n = static_cast<double>(inputs.rows());
            const double max_power = (codes.colwise().squaredNorm() / n).maxCoeff();
            observer({epoch, objective(model, inputs, codes), max_power});
        }
        model.basis.noalias() +=
            options.learning_rate * (residual.transpose() * codes) / static_cast<double>(inputs.rows());
        if (!model.basis.allFinite()) throw NumericError("sparsecode::train: non-finite basis update");
        normalize_columns(model.basis);
    }
    return model;
}

}  // namespace hvc::sparsecode
