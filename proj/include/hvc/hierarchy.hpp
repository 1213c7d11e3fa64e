#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hvc/common.hpp"
#include "hvc/gaussianize.hpp"
#include "hvc/imageio.hpp"
#include "hvc/sparsecode.hpp"
#include "hvc/spca.hpp"

// Two-layer model:
//
//   16x16 patch -> spca1 -> ica1 -> gauss1          (x4 quadrants of a 32x32 patch)
//   concat(4 x gauss1) -> spca2 -> ica2 [-> gauss2]
namespace hvc {

struct PipelineConfig {
    int layer1_patch = 16;
    int layer2_patch = 32;
    Index spca1_dim = 128;
    Index ica1_dim = 512;
    Index spca2_dim = 128;
    Index ica2_dim = 256;
    double lambda1 = 0.01;  // sPCA connection penalties
    double lambda2 = 0.03;
    double lambda_ica1 = 0.1;  // sparse-coding penalties
    double lambda_ica2 = 0.1;
    sparsecode::Penalty penalty = sparsecode::Penalty::LogCosh;
    int epochs_spca1 = 40000;
    int epochs_ica1 = 40000;
    int epochs_spca2 = 40000;
    int epochs_ica2 = 40000;
    int batch = 64;
    double lr_ica = 0.1;
    double lr_spca = 0.004;
    int gauss_samples = 10000;
    std::uint64_t seed = 0;

    static PipelineConfig paper();
    // 16x16 layer 1, M1 = 64, ica1 = 128, 5000 epochs per stage.
    static PipelineConfig desk();

    // Throws ShapeError on a violated invariant.
    void validate() const;

    Index layer1_dim() const { return static_cast<Index>(layer1_patch) * layer1_patch; }
    Index layer2_dim() const { return static_cast<Index>(layer2_patch) * layer2_patch; }
    Index layer2_input_dim() const { return 4 * ica1_dim; }
};

// Flat `key = value` text, `#` starts a comment. Unknown keys and malformed
// values throw IoError. Keys absent from the text keep the value in `base`.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig read_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string format_config(const PipelineConfig& config);

struct HierarchicalModel {
    spca::SpcaModel spca1;
    sparsecode::DictionaryModel ica1;
    Gaussianizer gauss1;
    spca::SpcaModel spca2;
    sparsecode::DictionaryModel ica2;
    Gaussianizer gauss2;
    PipelineConfig config;

    // Dimension chain L1 -> M1 -> K1 -> (x4) -> M2 -> K2 against the config.
    // Throws ShapeError.
    void validate() const;
};

// spca1.infer -> ica1.respond on one layer-1 patch; raw ICA responses.
Vector forward_layer1(const HierarchicalModel& model, const Vector& patch);
RowMatrix forward_layer1_batch(const HierarchicalModel& model, const RowMatrix& patches);

// Splits a layer-2 patch into non-overlapping quadrants (top-left, top-right,
// bottom-left, bottom-right) and concatenates gauss1(forward_layer1(q)).
Vector assemble_quadrants(const HierarchicalModel& model, const Vector& patch32);
RowMatrix assemble_quadrants_batch(const HierarchicalModel& model, const RowMatrix& patches32);

// assemble_quadrants -> spca2.infer -> ica2.respond. gauss2 is not applied.
Vector forward(const HierarchicalModel& model, const Vector& patch32);
RowMatrix forward_batch(const HierarchicalModel& model, const RowMatrix& patches32);

enum class Stage { Spca1, Ica1, Gauss1, Spca2, Ica2, Gauss2 };
const char* to_string(Stage s);

struct StageProgress {
    Stage stage = Stage::Spca1;
    int epoch = 0;
    double objective = 0.0;
    double max_second_moment = 0.0;
};
using ProgressObserver = std::function<void(const StageProgress&)>;

// Layer-by-layer training. Each epoch of every stage draws `batch` patches
// from one uniformly chosen image.
HierarchicalModel train_pipeline(const std::vector<GrayImage>& images, const PipelineConfig& config, Rng& rng,
                                 const ProgressObserver& observer = {});

// "HVC1" container: magic, u32 version, u64 config length + config text,
// then spca1 decoder, spca1 correlation, ica1 basis, gauss1 tables, spca2
// decoder, spca2 correlation, ica2 basis, gauss2 tables, each as u64 rows,
// u64 cols, row-major binary64.
inline constexpr std::uint32_t kModelVersion = 1;
void save(const HierarchicalModel& model, const std::filesystem::path& path);
HierarchicalModel load(const std::filesystem::path& path);

}  // namespace hvc
