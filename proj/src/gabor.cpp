#include "hvc/gabor.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

namespace hvc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kParams = 8;
using ParamVec = Eigen::Matrix<double, kParams, 1>;

// Internal coordinates keep freq and the sigmas positive.
ParamVec pack(const GaborParams& g) {
    ParamVec p;
    p << g.x0, g.y0, g.theta, std::log(g.freq), g.phase, std::log(g.sigma_par), std::log(g.sigma_perp), g.amplitude;
    return p;
}

GaborParams unpack(const ParamVec& p) {
    GaborParams g;
    g.x0 = p[0];
    g.y0 = p[1];
    g.theta = p[2];
    g.freq = std::exp(p[3]);
    g.phase = p[4];
    g.sigma_par = std::exp(p[5]);
    g.sigma_perp = std::exp(p[6]);
    g.amplitude = p[7];
    return g;
}

Vector residual(const ParamVec& p, const Vector& data, int side) {
    return render_gabor(unpack(p), side) - data;
}

double wrap_two_pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    return a < 0.0 ? a + 2.0 * kPi : a;
}

// theta in [0, pi), amplitude >= 0, phase in [0, 2 pi).
GaborParams canonical(GaborParams g) {
    if (g.amplitude < 0.0) {
        g.amplitude = -g.amplitude;
        g.phase += kPi;
    }
    const double turns = std::floor(g.theta / kPi);
    g.theta -= turns * kPi;
    if (g.theta >= kPi) g.theta -= kPi;
    // Rotating by an odd multiple of pi flips u' and hence the phase sign.
    if (static_cast<long long>(turns) % 2 != 0) g.phase = -g.phase;
    g.phase = wrap_two_pi(g.phase);
    return g;
}

double best_amplitude(GaborParams g, const Vector& data, int side) {
    g.amplitude = 1.0;
    const Vector unit = render_gabor(g, side);
    const double denom = unit.squaredNorm();
    return denom > 0.0 ? unit.dot(data) / denom : 0.0;
}

struct Init {
    double x0, y0, theta, freq, sigma;
};

Init initial_guess(const Vector& data, int side) {
    Init init{};
    const Vector energy = data.cwiseAbs2();
    const double total = energy.sum();
    double mx = 0.0, my = 0.0;
    for (int v = 0; v < side; ++v)
        for (int u = 0; u < side; ++u) {
            mx += u * energy[v * side + u];
            my += v * energy[v * side + u];
        }
    mx /= total;
    my /= total;
    double spread = 0.0;
    for (int v = 0; v < side; ++v)
        for (int u = 0; u < side; ++u) spread += ((u - mx) * (u - mx) + (v - my) * (v - my)) * energy[v * side + u];
    spread /= total;
    init.x0 = mx;
    init.y0 = my;
    // |envelope|^2 has per-axis variance sigma^2 / 2.
    init.sigma = std::clamp(std::sqrt(spread), 1.0, side / 2.0);

    // Peak of the zero-padded power spectrum over the half plane fy >= 0.
    const int grid = 4 * side;
    const double min_freq = 0.5 / side;
    double best = -1.0;
    for (int ky = 0; ky <= grid / 2; ++ky) {
        for (int kx = -grid / 2; kx <= grid / 2; ++kx) {
            const double fx = static_cast<double>(kx) / grid;
            const double fy = static_cast<double>(ky) / grid;
            const double f = std::hypot(fx, fy);
            if (f < min_freq || (ky == 0 && kx < 0)) continue;
            double re = 0.0, im = 0.0;
            for (int v = 0; v < side; ++v)
                for (int u = 0; u < side; ++u) {
                    const double a = 2.0 * kPi * (fx * (u - mx) + fy * (v - my));
                    re += data[v * side + u] * std::cos(a);
                    im -= data[v * side + u] * std::sin(a);
                }
            const double power = re * re + im * im;
            if (power > best) {
                best = power;
                init.freq = f;
                init.theta = std::atan2(fy, fx);
            }
        }
    }
    return init;
}

double sum_squares(const Vector& r) { return r.squaredNorm(); }

ParamVec refine(ParamVec p, const Vector& data, int side, const GaborFitOptions& opt) {
    Vector r = residual(p, data, side);
    double cost = sum_squares(r);
    double damping = 1e-6;
    Eigen::Matrix<double, Eigen::Dynamic, kParams> J(data.size(), kParams);

    for (int it = 0; it < opt.max_iterations; ++it) {
        for (int k = 0; k < kParams; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
            ParamVec hi = p, lo = p;
            hi[k] += h;
            lo[k] -= h;
            J.col(k) = (residual(hi, data, side) - residual(lo, data, side)) / (2.0 * h);
        }
        const Eigen::Matrix<double, kParams, kParams> JtJ = J.transpose() * J;
        const ParamVec g = J.transpose() * r;

        bool accepted = false;
        double new_cost = cost;
        ParamVec candidate;
        Vector new_r;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::Matrix<double, kParams, kParams> H = JtJ;
            H.diagonal().array() += damping * (JtJ.diagonal().array() + 1e-12);
            candidate = p - H.ldlt().solve(g);
            new_r = residual(candidate, data, side);
            new_cost = sum_squares(new_r);
            if (std::isfinite(new_cost) && new_cost <= cost) {
                accepted = true;
                damping = std::max(damping * 0.3, 1e-9);
            } else {
                damping *= 10.0;
            }
        }
        if (!accepted) break;
        const double change = (cost - new_cost) / std::max(cost, 1e-300);
        p = candidate;
        r = new_r;
        cost = new_cost;
        if (change < opt.relative_tolerance) break;
    }
    return p;
}

}  // namespace

double gabor_value(const GaborParams& g, double u, double v) {
    const double du = u - g.x0;
    const double dv = v - g.y0;
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    const double up = c * du + s * dv;
    const double vp = -s * du + c * dv;
    const double envelope = std::exp(-0.5 * (up * up / (g.sigma_par * g.sigma_par) +
                                            vp * vp / (g.sigma_perp * g.sigma_perp)));
    return g.amplitude * envelope * std::cos(2.0 * kPi * g.freq * up + g.phase);
}

Vector render_gabor(const GaborParams& g, int side) {
    Vector out(static_cast<Index>(side) * side);
    for (int v = 0; v < side; ++v)
        for (int u = 0; u < side; ++u) out[v * side + u] = gabor_value(g, u, v);
    return out;
}

GaborParams fit_gabor(const Vector& filter, int side, const GaborFitOptions& options) {
    require_shape(filter.size() == static_cast<Index>(side) * side, "fit_gabor: filter size mismatch");
    if (!filter.allFinite()) throw DegenerateInput("fit_gabor: non-finite filter");
    const double mean = filter.mean();
    const double sst = (filter.array() - mean).square().sum();
    if (!(sst > 0.0)) throw DegenerateInput("fit_gabor: constant filter");

    const Init init = initial_guess(filter, side);
    GaborParams best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (const double phase : {0.0, 0.5 * kPi, kPi, 1.5 * kPi}) {
        GaborParams g;
        g.x0 = init.x0;
        g.y0 = init.y0;
        g.theta = init.theta;
        g.freq = init.freq;
        g.phase = phase;
        g.sigma_par = init.sigma;
        g.sigma_perp = init.sigma;
        g.amplitude = best_amplitude(g, filter, side);
        if (g.amplitude == 0.0) g.amplitude = filter.cwiseAbs().maxCoeff();

        const ParamVec p = refine(pack(g), filter, side, options);
        const double sse = sum_squares(residual(p, filter, side));
        if (sse < best_sse) {
            best_sse = sse;
            best = unpack(p);
        }
    }
    best = canonical(best);
    best.r2 = 1.0 - best_sse / sst;
    return best;
}

}  // namespace hvc
