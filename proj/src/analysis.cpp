#include "hvc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "hvc/imageio.hpp"
#include "hvc/parallel.hpp"

namespace hvc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Index kStcBlock = 1024;

}  // namespace

StcSpectrum stc(const BatchResponse& respond, Index dim, Index n, Rng& rng) {
    if (dim < 1) throw ShapeError("stc: dim must be >= 1");
    if (n < dim) throw DegenerateInput("stc: need at least dim samples");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix C = Matrix::Zero(dim, dim);
    double total = 0.0;
    for (Index start = 0; start < n; start += kStcBlock) {
        const Index rows = std::min(kStcBlock, n - start);
        RowMatrix X(rows, dim);
        for (Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
        const Vector r = respond(X);
        require_shape(r.size() == rows, "stc: respond must return one value per stimulus");
        if (!r.allFinite()) throw NumericError("stc: non-finite response");
        const Vector w = r.array().square();
        C.noalias() += X.transpose() * w.asDiagonal() * X;
        total += w.sum();
    }
    if (!(total > 0.0)) throw DegenerateInput("stc: responses carry no weight");
    C /= total;
    C = 0.5 * (C + C.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    if (es.info() != Eigen::Success) throw NumericError("stc: eigendecomposition failed");
    StcSpectrum out;
    out.dim = dim;
    out.eigvals = es.eigenvalues().reverse();
    out.eigvecs = es.eigenvectors().rowwise().reverse();
    return out;
}

StcSpectrum stc(const Response& respond, Index dim, Index n, Rng& rng) {
    return stc(
        BatchResponse([&respond](const RowMatrix& X) {
            Vector r(X.rows());
            for (Index i = 0; i < X.rows(); ++i) r[i] = respond(X.row(i).transpose());
            return r;
        }),
        dim, n, rng);
}

const char* to_string(Layer2Stage s) { return s == Layer2Stage::Spca2 ? "spca2" : "ica2"; }

Layer2Stage layer2_stage_from_string(const std::string& name) {
    if (name == "spca2") return Layer2Stage::Spca2;
    if (name == "ica2") return Layer2Stage::Ica2;
    throw ShapeError("unknown layer-2 stage '" + name + "' (expected spca2 or ica2)");
}

Matrix pixel_features(const HierarchicalModel& model) { return model.spca1.decoder * model.ica1.basis; }

std::vector<GaborParams> fit_layer1_gabors(const HierarchicalModel& model, const GaborFitOptions& options) {
    const Matrix features = pixel_features(model);
    const int side = model.config.layer1_patch;
    std::vector<GaborParams> out(static_cast<std::size_t>(features.cols()));
    parallel_chunks(out.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
            try {
                out[j] = fit_gabor(features.col(static_cast<Index>(j)), side, options);
            } catch (const DegenerateInput&) {
                out[j] = GaborParams{};
                out[j].r2 = -std::numeric_limits<double>::infinity();
            }
        }
    });
    return out;
}

Vector layer2_connection_weights(const HierarchicalModel& model, Index unit, Layer2Stage stage) {
    if (stage == Layer2Stage::Spca2) {
        if (unit < 0 || unit >= model.spca2.output_dim())
            throw ShapeError("spca2 unit " + std::to_string(unit) + " out of range");
        return model.spca2.decoder.col(unit);
    }
    if (unit < 0 || unit >= model.ica2.output_dim())
        throw ShapeError("ica2 unit " + std::to_string(unit) + " out of range");
    return model.spca2.decoder * model.ica2.basis.col(unit);
}

RfMap build_rf_map(const HierarchicalModel& model, Index unit, Layer2Stage stage,
                   const std::vector<GaborParams>& gabor_table, double min_r2) {
    const Index K = model.ica1.output_dim();
    if (static_cast<Index>(gabor_table.size()) != K)
        throw ShapeError("build_rf_map: gabor table must hold one fit per layer-1 feature");
    const Vector w = layer2_connection_weights(model, unit, stage);
    const int P = model.config.layer1_patch;

    RfMap map;
    map.unit = unit;
    map.stage = stage;
    map.field = 2 * P;
    for (int q = 0; q < 4; ++q) {
        const double ox = (q % 2) * P;
        const double oy = (q / 2) * P;
        for (Index k = 0; k < K; ++k) {
            const GaborParams& g = gabor_table[static_cast<std::size_t>(k)];
            if (!(g.r2 >= min_r2)) {
                ++map.dropped;
                continue;
            }
            map.bars.push_back({g.x0 + ox, g.y0 + oy, g.theta, 4.0 * g.sigma_par, w[q * K + k], q, k});
        }
    }
    return map;
}

const char* to_string(CellClass c) {
    switch (c) {
        case CellClass::UniformOrientation: return "UniformOrientation";
        case CellClass::NonUniform: return "NonUniform";
        case CellClass::LocationOnly: return "LocationOnly";
    }
    return "?";
}

CellReport classify_cell(const RfMap& map, const ClassifyOptions& opt) {
    if (map.bars.empty()) throw DegenerateInput("classify_cell: empty RF map");
    if (opt.grid < 1 || map.field < 1) throw ShapeError("classify_cell: bad grid");
    const int G = opt.grid;
    const double cell = static_cast<double>(map.field) / G;
    const std::size_t n_loc = static_cast<std::size_t>(G) * G;

    std::vector<double> mass(n_loc, 0.0), pos(n_loc, 0.0), cx(n_loc, 0.0), sy(n_loc, 0.0);
    for (const RfBar& b : map.bars) {
        const int gx = std::clamp(static_cast<int>(std::floor(b.x0 / cell)), 0, G - 1);
        const int gy = std::clamp(static_cast<int>(std::floor(b.y0 / cell)), 0, G - 1);
        const std::size_t l = static_cast<std::size_t>(gy) * G + gx;
        mass[l] += std::abs(b.weight);
        if (b.weight > 0.0) {
            pos[l] += b.weight;
            cx[l] += b.weight * std::cos(2.0 * b.theta);
            sy[l] += b.weight * std::sin(2.0 * b.theta);
        }
    }
    const double peak = *std::max_element(mass.begin(), mass.end());

    CellReport rep;
    rep.resultants.assign(n_loc, -1.0);
    rep.mean_orientation_deg.assign(n_loc, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> doubled;
    for (std::size_t l = 0; l < n_loc; ++l) {
        if (mass[l] < opt.active_fraction * peak) continue;
        ++rep.active;
        const double r = pos[l] > 0.0 ? std::hypot(cx[l], sy[l]) / pos[l] : 0.0;
        rep.resultants[l] = r;
        if (r > opt.oriented_resultant) {
            ++rep.oriented;
            const double a = std::atan2(sy[l], cx[l]);
            doubled.push_back(a);
            double deg = 0.5 * a * 180.0 / kPi;
            if (deg < 0.0) deg += 180.0;
            rep.mean_orientation_deg[l] = deg;
        }
    }

    if (rep.oriented < opt.location_only_fraction * rep.active) {
        rep.cls = CellClass::LocationOnly;
        return rep;
    }
    double mc = 0.0, ms = 0.0;
    for (double a : doubled) {
        mc += std::cos(a);
        ms += std::sin(a);
    }
    const double centre = std::atan2(ms, mc);
    double worst = 0.0;
    for (double a : doubled) {
        const double d = std::abs(std::remainder(a - centre, 2.0 * kPi));
        worst = std::max(worst, 0.5 * d * 180.0 / kPi);
    }
    rep.dispersion_deg = doubled.size() < 2 ? 0.0 : worst;
    rep.cls = rep.dispersion_deg <= opt.uniform_tolerance_deg ? CellClass::UniformOrientation : CellClass::NonUniform;
    return rep;
}

void render_filters(const std::vector<Vector>& filters, int side, const std::filesystem::path& path) {
    if (filters.empty()) throw DegenerateInput("render_filters: no filters");
    const Index dim = static_cast<Index>(side) * side;
    for (const auto& f : filters) require_shape(f.size() == dim, "render_filters: filter size mismatch");
    const int n = static_cast<int>(filters.size());
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    const int width = cols * side + cols - 1;
    const int height = rows * side + rows - 1;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height, 0);

    for (int k = 0; k < n; ++k) {
        const Vector& f = filters[static_cast<std::size_t>(k)];
        const double lo = f.minCoeff();
        const double hi = f.maxCoeff();
        const int ox = (k % cols) * (side + 1);
        const int oy = (k / cols) * (side + 1);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double v = f[y * side + x];
                const double level = hi > lo ? std::round(255.0 * (v - lo) / (hi - lo)) : 128.0;
                pixels[static_cast<std::size_t>(oy + y) * width + ox + x] = static_cast<std::uint8_t>(level);
            }
    }
    write_pgm(path, width, height, pixels);
}

void render_filters(const Matrix& columns, int side, const std::filesystem::path& path) {
    std::vector<Vector> filters;
    filters.reserve(static_cast<std::size_t>(columns.cols()));
    for (Index j = 0; j < columns.cols(); ++j) filters.emplace_back(columns.col(j));
    render_filters(filters, side, path);
}

std::string bar_color(double normalized) {
    const double t = std::clamp(normalized, -1.0, 1.0);
    if (std::abs(t) < 0.1 || !std::isfinite(t)) return "#808080";
    const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
    char buf[8];
    if (t > 0.0)
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
    else
        std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
    return buf;
}

void render_rf_map(const RfMap& map, const std::filesystem::path& path) {
    if (map.bars.empty()) throw DegenerateInput("render_rf_map: empty RF map");
    double peak = 0.0;
    for (const auto& b : map.bars) peak = std::max(peak, std::abs(b.weight));

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const int F = map.field;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  16 * F, 16 * F, F, F);
    out << buf;
    out << "<rect x=\"0\" y=\"0\" width=\"" << F << "\" height=\"" << F << "\" fill=\"#ffffff\"/>\n";

    // Weak bars first so strong ones stay visible.
    std::vector<const RfBar*> order;
    for (const auto& b : map.bars) order.push_back(&b);
    std::stable_sort(order.begin(), order.end(),
                     [](const RfBar* a, const RfBar* b) { return std::abs(a->weight) < std::abs(b->weight); });
    for (const RfBar* b : order) {
        const double h = 0.5 * b->length;
        const double dx = h * std::cos(b->theta);
        const double dy = h * std::sin(b->theta);
        const double cx = b->x0 + 0.5;
        const double cy = b->y0 + 0.5;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.4f\" y1=\"%.4f\" x2=\"%.4f\" y2=\"%.4f\" stroke=\"%s\" stroke-width=\"0.3\"/>\n",
                      cx - dx, cy - dy, cx + dx, cy + dy, bar_color(peak > 0.0 ? b->weight / peak : 0.0).c_str());
        out << buf;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path.string());
}

double locality_fraction(const Vector& filter, int side, double mass) {
    require_shape(filter.size() == static_cast<Index>(side) * side, "locality_fraction: size mismatch");
    const int P = side;
    Matrix S = Matrix::Zero(P + 1, P + 1);
    for (int r = 0; r < P; ++r)
        for (int c = 0; c < P; ++c) S(r + 1, c + 1) = std::abs(filter[r * P + c]) + S(r, c + 1) + S(r + 1, c) - S(r, c);
    const double need = mass * S(P, P);
    int best = P * P;
    for (int r0 = 0; r0 < P; ++r0)
        for (int r1 = r0 + 1; r1 <= P; ++r1)
            for (int c0 = 0; c0 < P; ++c0)
                for (int c1 = c0 + 1; c1 <= P; ++c1) {
                    const int area = (r1 - r0) * (c1 - c0);
                    if (area >= best) break;
                    if (S(r1, c1) - S(r0, c1) - S(r1, c0) + S(r0, c0) >= need) best = area;
                }
    return static_cast<double>(best) / (P * P);
}

}  // namespace hvc
