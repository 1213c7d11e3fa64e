#pragma once

#include <vector>

#include "helpers.hpp"
#include "hvc/hierarchy.hpp"

namespace testing {

// Tiny configuration: 4x4 / 8x8 patches, a few epochs per stage.
inline hvc::PipelineConfig tiny_config() {
    hvc::PipelineConfig c;
    c.layer1_patch = 4;
    c.layer2_patch = 8;
    c.spca1_dim = 6;
    c.ica1_dim = 8;
    c.spca2_dim = 10;
    c.ica2_dim = 12;
    c.epochs_spca1 = c.epochs_ica1 = c.epochs_spca2 = c.epochs_ica2 = 40;
    c.batch = 16;
    c.gauss_samples = 300;
    c.seed = 5;
    return c;
}

inline std::vector<hvc::GrayImage> tiny_images() {
    hvc::Rng rng(1234);
    return {smooth_noise_image(40, 32, rng), smooth_noise_image(36, 36, rng), smooth_noise_image(48, 24, rng)};
}

inline const hvc::HierarchicalModel& tiny_model() {
    static const hvc::HierarchicalModel model = [] {
        const auto config = tiny_config();
        hvc::Rng rng(config.seed);
        return hvc::train_pipeline(tiny_images(), config, rng);
    }();
    return model;
}

}  // namespace testing
