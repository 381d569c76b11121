#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "obfair/image.hpp"
#include "obfair/plugin.hpp"

namespace obfair {

inline constexpr int kEncodingDim = 128;

/// 128-dimensional face encoding, all components finite.
struct Encoding {
    std::string image_id;
    std::array<double, kEncodingDim> vector{};
};

/// Embed a face via the plugin "embed" op. The response must carry exactly
/// 128 finite reals; anything else is a protocol error.
Encoding subprocess_embed(PluginClient& client, const ImageBuffer& img, const FaceBox& box,
                          const std::string& image_id = {});

/// Synthetic embedder configuration. Encodings are drawn around a per-identity
/// centroid; obfuscated images of a group receive extra seeded noise scaled by
/// obfuscation_noise[group]. That knob is the only group-dependent term, which
/// makes it a controllable ground-truth bias for end-to-end tests.
struct SyntheticEmbedderConfig {
    std::uint64_t seed = 0;
    double identity_scale = 1.0;          // inter-identity spread, > 0
    double noise_scale = 0.0;             // intra-identity spread, >= 0
    std::map<std::string, double> obfuscation_noise; // group label -> extra spread

    void validate() const;
};

/// Pure deterministic function of (config, ids, group, is_obfuscated):
/// encoding = centroid(identity) + eta1*noise_scale
///          + (is_obfuscated ? eta2*obfuscation_noise[group] : 0),
/// with centroid and noise streams keyed by seeded hashes of the ids.
/// Groups absent from the map contribute zero extra noise.
Encoding synthetic_embed(const SyntheticEmbedderConfig& cfg, const std::string& identity_id,
                         const std::string& image_id, const std::string& group,
                         bool is_obfuscated);

} // namespace obfair
