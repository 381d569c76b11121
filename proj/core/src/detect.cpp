#include "obfair/detect.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "obfair/codec.hpp"

namespace obfair {

using nlohmann::json;

OracleDetector::OracleDetector(OracleDetectorConfig cfg) : cfg_(cfg) {
    if (cfg_.contrast_threshold < 0.0)
        throw ConfigError("oracle detector threshold must be >= 0");
}

double OracleDetector::gradient_rms(const ImageBuffer& img) {
    img.validate();
    double sum_sq = 0.0;
    long long count = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x + 1 < img.width; ++x) {
            double d = static_cast<double>(luma(img, x + 1, y)) - luma(img, x, y);
            sum_sq += d * d;
            ++count;
        }
    for (int y = 0; y + 1 < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double d = static_cast<double>(luma(img, x, y + 1)) - luma(img, x, y);
            sum_sq += d * d;
            ++count;
        }
    if (count == 0) return 0.0;
    return std::sqrt(sum_sq / static_cast<double>(count));
}

std::vector<FaceBox> OracleDetector::detect(const ImageBuffer& img) {
    if (gradient_rms(img) >= cfg_.contrast_threshold)
        return {FaceBox{0, 0, img.width, img.height}};
    return {};
}

PluginDetector::PluginDetector(std::shared_ptr<PluginClient> client)
    : client_(std::move(client)) {
    if (!client_->supports("detect"))
        throw ProtocolError("plugin does not advertise the 'detect' op");
}

std::vector<FaceBox> PluginDetector::detect(const ImageBuffer& img) {
    json req{{"op", "detect"}, {"image", base64_encode(encode_png(img))}};
    json resp = client_->request(req);
    if (!resp.contains("boxes") || !resp["boxes"].is_array())
        throw ProtocolError("detect response missing 'boxes' array");
    std::vector<FaceBox> boxes;
    for (const auto& b : resp["boxes"]) {
        FaceBox box;
        try {
            box.x = b.at("x").get<int>();
            box.y = b.at("y").get<int>();
            box.w = b.at("w").get<int>();
            box.h = b.at("h").get<int>();
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed box in detect response: ") + e.what());
        }
        if (!box.valid_for(img))
            throw ProtocolError("detect response box out of image bounds");
        boxes.push_back(box);
    }
    return boxes;
}

} // namespace obfair
