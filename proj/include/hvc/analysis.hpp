#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hvc/common.hpp"
#include "hvc/gabor.hpp"
#include "hvc/hierarchy.hpp"

namespace hvc {

// ---- spike-triggered covariance ----

struct StcSpectrum {
    Vector eigvals;  // descending
    Matrix eigvecs;  // orthonormal columns, eigvecs.col(i) <-> eigvals[i]
    Index dim = 0;
};

// Maps a block of stimuli (rows) to one response per row.
using BatchResponse = std::function<Vector(const RowMatrix&)>;
using Response = std::function<double(const Vector&)>;

// n i.i.d. N(0, I) stimuli; C = sum w x x^T / sum w with w = respond(x)^2.
// Stimuli are drawn and reduced in fixed-size blocks, so the result depends
// only on the seed. Throws DegenerateInput when n < dim or all weights vanish.
StcSpectrum stc(const BatchResponse& respond, Index dim, Index n, Rng& rng);
StcSpectrum stc(const Response& respond, Index dim, Index n, Rng& rng);

// ---- features and connection weights ----

enum class Layer2Stage { Spca2, Ica2 };
const char* to_string(Layer2Stage s);
Layer2Stage layer2_stage_from_string(const std::string& name);

// Pixel-space layer-1 features: spca1.decoder * ica1.basis, one per column.
Matrix pixel_features(const HierarchicalModel& model);

// Gabor fit of every column of pixel_features.
std::vector<GaborParams> fit_layer1_gabors(const HierarchicalModel& model, const GaborFitOptions& options = {});

// Column `unit` of spca2.decoder, or spca2.decoder * column `unit` of
// ica2.basis. Length 4 * ica1_dim, laid out quadrant by quadrant.
Vector layer2_connection_weights(const HierarchicalModel& model, Index unit, Layer2Stage stage);

// ---- RF maps ----

inline constexpr double kGaborSuccessR2 = 0.5;

struct RfBar {
    double x0 = 0.0;  // in the layer-2 field
    double y0 = 0.0;
    double theta = 0.0;
    double length = 0.0;
    double weight = 0.0;
    int quadrant = 0;   // 0 TL, 1 TR, 2 BL, 3 BR
    Index feature = 0;  // layer-1 ICA unit
};

struct RfMap {
    Index unit = 0;
    Layer2Stage stage = Layer2Stage::Ica2;
    int field = 0;  // side of the layer-2 field in pixels
    std::vector<RfBar> bars;
    Index dropped = 0;  // bars skipped for a failed Gabor fit, all quadrants
};

// One bar per successfully fitted layer-1 feature per quadrant: centre
// offset by the quadrant origin, length 4 * sigma_par, weight from
// layer2_connection_weights.
RfMap build_rf_map(const HierarchicalModel& model, Index unit, Layer2Stage stage,
                   const std::vector<GaborParams>& gabor_table, double min_r2 = kGaborSuccessR2);

// ---- cell taxonomy ----

enum class CellClass { UniformOrientation, NonUniform, LocationOnly };
const char* to_string(CellClass c);

struct ClassifyOptions {
    int grid = 4;                       // locations per side
    double active_fraction = 0.10;      // of the heaviest location's |weight| mass
    double oriented_resultant = 0.5;    // doubled-angle resultant length
    double location_only_fraction = 0.25;
    double uniform_tolerance_deg = 22.5;
};

struct CellReport {
    CellClass cls = CellClass::LocationOnly;
    // Per location, row-major over the grid; -1 for inactive locations.
    std::vector<double> resultants;
    std::vector<double> mean_orientation_deg;  // NaN unless oriented
    int active = 0;
    int oriented = 0;
    // Largest deviation (degrees) of an oriented location's mean orientation
    // from their circular mean; 0 with fewer than two oriented locations.
    double dispersion_deg = 0.0;
};

CellReport classify_cell(const RfMap& map, const ClassifyOptions& options = {});

// ---- rendering ----

// Tiled grid, ceil(sqrt(n)) columns, each filter min-max scaled to [0, 255]
// (constant filters render as 128), 1-pixel black separators. PGM output.
void render_filters(const std::vector<Vector>& filters, int side, const std::filesystem::path& path);
void render_filters(const Matrix& columns, int side, const std::filesystem::path& path);

// "#rrggbb" for a weight normalized by the map's max |weight|.
std::string bar_color(double normalized);

// Minimal SVG: background rect plus one line per bar.
void render_rf_map(const RfMap& map, const std::filesystem::path& path);

// ---- locality ----

// Area fraction of the smallest axis-aligned box holding `mass` of the
// filter's L1 mass.
double locality_fraction(const Vector& filter, int side, double mass = 0.9);

}  // namespace hvc
