#include "obfair/embed.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "obfair/codec.hpp"
#include "obfair/rng.hpp"

namespace obfair {

using nlohmann::json;

Encoding subprocess_embed(PluginClient& client, const ImageBuffer& img, const FaceBox& box,
                          const std::string& image_id) {
    if (!client.supports("embed"))
        throw ProtocolError("plugin does not advertise the 'embed' op");
    if (!box.valid_for(img)) throw ImageError("face box out of image bounds");
    json req{{"op", "embed"},
             {"image", base64_encode(encode_png(img))},
             {"box", {{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}}}};
    json resp = client.request(req);
    if (!resp.contains("encoding") || !resp["encoding"].is_array())
        throw ProtocolError("embed response missing 'encoding' array");
    const auto& arr = resp["encoding"];
    if (arr.size() != kEncodingDim)
        throw ProtocolError("embed response has " + std::to_string(arr.size()) +
                            " components, expected 128");
    Encoding enc;
    enc.image_id = image_id;
    for (int i = 0; i < kEncodingDim; ++i) {
        if (!arr[i].is_number())
            throw ProtocolError("embed response component is not a number");
        double v = arr[i].get<double>();
        if (!std::isfinite(v))
            throw ProtocolError("embed response contains a non-finite component");
        enc.vector[static_cast<std::size_t>(i)] = v;
    }
    return enc;
}

void SyntheticEmbedderConfig::validate() const {
    if (!(identity_scale > 0.0) || !std::isfinite(identity_scale))
        throw ConfigError("synthetic embedder identity_scale must be finite and > 0");
    if (noise_scale < 0.0 || !std::isfinite(noise_scale))
        throw ConfigError("synthetic embedder noise_scale must be finite and >= 0");
    for (const auto& [group, v] : obfuscation_noise)
        if (v < 0.0 || !std::isfinite(v))
            throw ConfigError("obfuscation_noise for group '" + group +
                              "' must be finite and >= 0");
}

Encoding synthetic_embed(const SyntheticEmbedderConfig& cfg, const std::string& identity_id,
                         const std::string& image_id, const std::string& group,
                         bool is_obfuscated) {
    cfg.validate();
    double obf_scale = 0.0;
    if (is_obfuscated) {
        auto it = cfg.obfuscation_noise.find(group);
        if (it != cfg.obfuscation_noise.end()) obf_scale = it->second;
    }

    NormalStream centroid(mix64(cfg.seed, fnv1a64("identity:" + identity_id)));
    NormalStream intra(mix64(cfg.seed, fnv1a64("image-noise:" + image_id)));
    NormalStream obf(mix64(cfg.seed, fnv1a64("obf-noise:" + image_id)));

    Encoding enc;
    enc.image_id = image_id;
    for (int i = 0; i < kEncodingDim; ++i) {
        double v = cfg.identity_scale * centroid.next() + cfg.noise_scale * intra.next();
        if (obf_scale > 0.0) v += obf_scale * obf.next();
        enc.vector[static_cast<std::size_t>(i)] = v;
    }
    return enc;
}

} // namespace obfair
