#include "obfair/calib.hpp"

#include <algorithm>
#include <cmath>

#include "obfair/imgops.hpp"

namespace obfair {

std::string to_string(CalibrationFlag f) {
    switch (f) {
        case CalibrationFlag::exact: return "exact";
        case CalibrationFlag::capped_at_max: return "capped_at_max";
        case CalibrationFlag::undetectable_at_min: return "undetectable_at_min";
    }
    return "exact";
}

ImageBuffer apply_obfuscation(const ImageBuffer& img, const FaceBox& box,
                              ObfuscationMethod method, int strength) {
    if (strength < 0) throw ImageError("obfuscation strength must be >= 0");
    if (strength == 0) return img;
    if (method == ObfuscationMethod::gaussian_blur)
        return blur_roi(img, box, 2 * strength + 1);
    return pixelate_roi(img, box, box.roi_size() - strength);
}

namespace {

double normalized_level(ObfuscationMethod method, int strength, int roi_size) {
    if (method == ObfuscationMethod::gaussian_blur)
        return static_cast<double>(2 * strength + 1) / roi_size;
    return static_cast<double>(roi_size - strength) / roi_size;
}

} // namespace

ObfuscationLevel calibrate_probe(const StrengthProbe& detected, ObfuscationMethod method,
                                 int roi_size, const std::string& image_id) {
    if (roi_size < 1) throw ImageError("roi_size must be >= 1");

    ObfuscationLevel out;
    out.image_id = image_id;
    out.method = method;

    long long calls = 0;
    auto probe = [&](int v) {
        ++calls;
        return detected(v);
    };
    auto finish = [&](int v, CalibrationFlag flag) {
        out.strength.value = v;
        out.flag = flag;
        out.normalized = normalized_level(method, v, roi_size);
        out.detector_calls = calls;
        return out;
    };

    const int v_max = Strength::max_for(method, roi_size);
    if (v_max <= 0) {
        // Degenerate ROI: no obfuscation strength exists at all.
        return finish(0, probe(0) ? CalibrationFlag::capped_at_max
                                  : CalibrationFlag::undetectable_at_min);
    }

    int v0 = std::min(Strength::initial_for(method, roi_size), v_max);
    if (v0 < 1) v0 = 1;

    int lo, hi; // bracket with detected(lo) && !detected(hi)
    if (probe(v0)) {
        // Double until detection fails or the range is exhausted.
        int good = v0;
        for (;;) {
            if (good >= v_max) return finish(v_max, CalibrationFlag::capped_at_max);
            int next = good > v_max / 2 ? v_max : 2 * good;
            if (probe(next)) {
                good = next;
            } else {
                lo = good;
                hi = next;
                break;
            }
        }
    } else {
        // Halve (integer floor) until detection holds or the floor is hit.
        int bad = v0;
        for (;;) {
            if (bad == 1) return finish(0, CalibrationFlag::undetectable_at_min);
            int next = bad / 2;
            if (probe(next)) {
                lo = next;
                hi = bad;
                break;
            }
            bad = next;
        }
    }

    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (probe(mid))
            lo = mid;
        else
            hi = mid;
    }
    return finish(lo, CalibrationFlag::exact);
}

ObfuscationLevel calibrate(const ImageBuffer& img, const FaceBox& box,
                           ObfuscationMethod method, Detector& detector,
                           const std::string& image_id) {
    img.validate();
    if (!box.valid_for(img)) throw ImageError("face box out of image bounds");
    StrengthProbe probe = [&](int v) {
        return !detector.detect(apply_obfuscation(img, box, method, v)).empty();
    };
    return calibrate_probe(probe, method, box.roi_size(), image_id);
}

LevelStats five_number_summary(std::vector<double> values) {
    if (values.empty()) throw Error("five_number_summary needs at least one value");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();

    auto median_of = [&](std::size_t begin, std::size_t end) {
        std::size_t len = end - begin;
        std::size_t mid = begin + len / 2;
        if (len % 2 == 1) return values[mid];
        return (values[mid - 1] + values[mid]) / 2.0;
    };

    LevelStats st;
    st.count = n;
    st.min = values.front();
    st.max = values.back();
    st.median = median_of(0, n);
    // Inclusive quartiles: odd counts put the median element in both halves.
    std::size_t half = n / 2;
    if (n % 2 == 1) {
        st.q1 = median_of(0, half + 1);
        st.q3 = median_of(half, n);
    } else {
        st.q1 = median_of(0, half);
        st.q3 = median_of(half, n);
    }
    return st;
}

std::map<std::string, LevelStats>
level_statistics(const std::vector<ObfuscationLevel>& levels,
                 const std::map<std::string, std::string>& image_group,
                 const std::function<void(const std::string&)>& warn) {
    std::map<std::string, std::vector<double>> grouped;
    for (const auto& [image_id, group] : image_group)
        grouped[group]; // make every declared group visible, even if empty
    for (const auto& lvl : levels) {
        auto it = image_group.find(lvl.image_id);
        if (it == image_group.end())
            throw Error("no group assignment for image '" + lvl.image_id + "'");
        grouped[it->second].push_back(lvl.normalized);
    }

    std::map<std::string, LevelStats> stats;
    for (auto& [group, values] : grouped) {
        if (values.empty()) {
            if (warn) warn("group '" + group + "' has no levels; omitted from statistics");
            continue;
        }
        stats.emplace(group, five_number_summary(std::move(values)));
    }
    return stats;
}

} // namespace obfair
