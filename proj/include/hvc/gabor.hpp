#pragma once

#include "hvc/common.hpp"

namespace hvc {

// g(u, v) = amplitude * exp(-u'^2 / 2 sigma_par^2 - v'^2 / 2 sigma_perp^2)
//                     * cos(2 pi freq u' + phase)
// where (u', v') is (u - x0, v - y0) rotated by theta. u is the column index,
// v the row index of a row-major side x side filter.
struct GaborParams {
    double x0 = 0.0;
    double y0 = 0.0;
    double theta = 0.0;  // [0, pi)
    double freq = 0.0;   // cycles / pixel
    double phase = 0.0;  // [0, 2 pi)
    double sigma_par = 1.0;
    double sigma_perp = 1.0;
    double amplitude = 0.0;
    double r2 = 0.0;  // 1 - SSE / SST of the fit
};

double gabor_value(const GaborParams& g, double u, double v);

// Rasterizes g onto a side x side grid, row-major.
Vector render_gabor(const GaborParams& g, int side);

struct GaborFitOptions {
    int max_iterations = 200;
    double relative_tolerance = 1e-8;
};

// Least-squares Gabor fit: centroid / power-spectrum initialization, damped
// Gauss-Newton refinement from four initial phases, best fit kept. Throws
// DegenerateInput for a constant filter.
GaborParams fit_gabor(const Vector& filter, int side, const GaborFitOptions& options = {});

}  // namespace hvc
