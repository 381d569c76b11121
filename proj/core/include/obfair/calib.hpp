#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "obfair/detect.hpp"
#include "obfair/image.hpp"

namespace obfair {

/// Integer obfuscation strength. 0 means no obfuscation. Larger is always
/// stronger: blur kernel k = 2*value + 1, pixelation target s = roi - value.
struct Strength {
    int value = 0;

    int blur_kernel() const { return 2 * value + 1; }
    int pixelation_target(int roi_size) const { return roi_size - value; }

    /// Smallest strength considered fully obfuscated for the method.
    static int max_for(ObfuscationMethod method, int roi_size) {
        if (method == ObfuscationMethod::gaussian_blur) {
            // smallest v with 2v+1 >= 2*roi
            return roi_size;
        }
        return roi_size - 1; // s = 1
    }

    /// Search origin: a kernel near 5% of the ROI for blur, half the ROI
    /// for pixelation. Chosen so bracketing is short around typical levels.
    static int initial_for(ObfuscationMethod method, int roi_size) {
        if (method == ObfuscationMethod::gaussian_blur) {
            double target = 0.05 * roi_size;
            int k = 2 * static_cast<int>(target / 2.0) + 1; // nearest odd, ties up
            if (k < 3) k = 3;
            return (k - 1) / 2;
        }
        int s = std::max(1, roi_size / 2);
        return roi_size - s;
    }
};

/// Apply `method` at integer strength v to the ROI. v = 0 is the identity.
ImageBuffer apply_obfuscation(const ImageBuffer& img, const FaceBox& box,
                              ObfuscationMethod method, int strength);

enum class CalibrationFlag { exact, capped_at_max, undetectable_at_min };

std::string to_string(CalibrationFlag f);

/// Calibrated per-image obfuscation record. `normalized` divides the linear
/// obfuscation size (kernel k, target s) by the ROI size, so is always > 0.
struct ObfuscationLevel {
    std::string image_id;
    ObfuscationMethod method = ObfuscationMethod::gaussian_blur;
    Strength strength;
    double normalized = 0.0;
    CalibrationFlag flag = CalibrationFlag::exact;
    long long detector_calls = 0;
};

/// Detection as a function of strength alone. Probes must be consistent
/// within one calibration (the detector contract guarantees this).
using StrengthProbe = std::function<bool(int)>;

/// Core search: from the initial strength, double while detection holds
/// (halve while it fails), which brackets the detection boundary; then
/// binary-search the integer interval down to adjacent values. Returns the
/// largest strength still detected, or the capped/undetectable sentinel
/// when doubling or halving exhausts the range.
ObfuscationLevel calibrate_probe(const StrengthProbe& detected, ObfuscationMethod method,
                                 int roi_size, const std::string& image_id = {});

/// Image-level calibration: probe(v) obfuscates at v and asks the detector.
/// Detector transport errors propagate without a partial result.
ObfuscationLevel calibrate(const ImageBuffer& img, const FaceBox& box,
                           ObfuscationMethod method, Detector& detector,
                           const std::string& image_id = {});

struct LevelStats {
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Per-group order statistics of normalized levels. Median averages the two
/// middle values for even counts; quartiles use the inclusive method (the
/// halves share the median element when the count is odd). Groups with no
/// levels are omitted with a warning.
std::map<std::string, LevelStats>
level_statistics(const std::vector<ObfuscationLevel>& levels,
                 const std::map<std::string, std::string>& image_group,
                 const std::function<void(const std::string&)>& warn = nullptr);

/// Inclusive-method five-number summary of raw values (helper for reports).
LevelStats five_number_summary(std::vector<double> values);

} // namespace obfair
