#pragma once

#include <cstdint>
#include <string>

#include "obfair/image.hpp"

namespace obfair {

/// Parameters for a self-contained synthetic cohort: seeded noise images on
/// disk plus a manifest, balanced across the four race x gender cells.
struct SyntheticCohortSpec {
    std::string directory;
    int identities = 8;      // multiple of 4 keeps the 2x2 cells balanced
    int images_per_identity = 5;
    int image_size = 64;
    std::uint64_t seed = 0;
};

/// High-contrast seeded noise image; distinct ids give distinct content.
ImageBuffer synthetic_noise_image(std::uint64_t seed, int width, int height, int channels = 1);

/// Write the cohort (PNGs + manifest.csv) and return the manifest path.
std::string write_synthetic_cohort(const SyntheticCohortSpec& spec);

} // namespace obfair
