#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obfair/detect.hpp"
#include "obfair/image.hpp"

namespace obfair {

enum class Gender { male, female };
enum class Race { white, non_white };

std::string to_string(Gender g);
std::string to_string(Race r);

/// A subject with binary protected attributes. Attributes are always
/// present after ingestion; unknown values are rejected at parse time.
struct Identity {
    std::string identity_id;
    Gender gender = Gender::male;
    Race race = Race::white;
};

enum class Split { pending, train, test, excluded };
enum class ExclusionReason { duplicate_checksum, zero_faces, multiple_faces, undetectable };

std::string to_string(Split s);
std::string to_string(ExclusionReason r);

struct ImageRecord {
    std::string image_id;
    std::string file_path;
    std::string checksum; // 32-hex md5, carried opaquely from the manifest
    std::string identity_id;
    std::optional<FaceBox> face_box;
    Split split = Split::pending;
    std::optional<ExclusionReason> exclusion_reason;

    bool retained() const { return split != Split::excluded; }
};

struct SplitPlan {
    struct IdentitySplit {
        std::vector<std::string> train;
        std::vector<std::string> test;
    };
    std::uint64_t seed = 0;
    std::map<std::string, IdentitySplit> per_identity;

    std::string to_json_string() const;
    static SplitPlan from_json_string(const std::string& text);
};

using WarnFn = std::function<void(const std::string&)>;

/// Parse the manifest CSV (header: image_id,file_path,md5,identity_id,gender,race),
/// materialize identities, and mark checksum duplicates beyond the first
/// occurrence as excluded. Malformed rows fail hard with the line number.
std::pair<std::vector<Identity>, std::vector<ImageRecord>>
ingest_manifest(const std::string& path);

/// Run the detector over every retained record. Exactly one box: keep and
/// store it. Zero or several: exclude. Unreadable files count as zero_faces
/// with a warning so one bad file cannot kill a long batch.
std::vector<ImageRecord> filter_single_face(std::vector<ImageRecord> records,
                                            const DetectorFactory& make_detector,
                                            int workers = 1,
                                            const WarnFn& warn = nullptr);

/// Seeded per-identity 80/20 split over retained records. Deterministic and
/// independent of record order: image ids are canonicalized by sorting and
/// each identity gets its own seed stream. |test| = max(1, round(0.2*n));
/// identities with fewer than 2 retained images are left out and logged.
SplitPlan make_split(const std::vector<ImageRecord>& records, std::uint64_t seed,
                     const WarnFn& warn = nullptr);

} // namespace obfair
