#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "obfair/image.hpp"
#include "obfair/plugin.hpp"

namespace obfair {

/// Face detection contract. Implementations must be deterministic:
/// identical buffer in, identical box list out.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<FaceBox> detect(const ImageBuffer& img) = 0;
};

/// Produces one Detector per worker. Workers never share an instance.
using DetectorFactory = std::function<std::unique_ptr<Detector>()>;

struct OracleDetectorConfig {
    double contrast_threshold = 0.0;
};

/// Deterministic test-oracle detector: reports the full-image box iff the
/// RMS of the horizontal+vertical first-difference luma gradients reaches
/// the configured threshold. Both blur and pixelation drain gradient
/// energy, so calibration against it behaves like a real detector while
/// staying analyzable.
class OracleDetector : public Detector {
public:
    explicit OracleDetector(OracleDetectorConfig cfg);
    std::vector<FaceBox> detect(const ImageBuffer& img) override;

    /// RMS over all first differences of the 8-bit luma. 0 for flat images.
    static double gradient_rms(const ImageBuffer& img);

private:
    OracleDetectorConfig cfg_;
};

/// Detector backed by an external plugin process ("detect" op).
/// Boxes are validated against the image bounds.
class PluginDetector : public Detector {
public:
    explicit PluginDetector(std::shared_ptr<PluginClient> client);
    std::vector<FaceBox> detect(const ImageBuffer& img) override;

private:
    std::shared_ptr<PluginClient> client_;
};

} // namespace obfair
