#include "obfair/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "obfair/codec.hpp"
#include "obfair/parallel.hpp"
#include "obfair/rng.hpp"

namespace obfair {

using nlohmann::json;

std::string to_string(Gender g) { return g == Gender::male ? "male" : "female"; }
std::string to_string(Race r) { return r == Race::white ? "white" : "non_white"; }

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        case Split::excluded: return "excluded";
        case Split::pending: return "pending";
    }
    return "pending";
}

std::string to_string(ExclusionReason r) {
    switch (r) {
        case ExclusionReason::duplicate_checksum: return "duplicate_checksum";
        case ExclusionReason::zero_faces: return "zero_faces";
        case ExclusionReason::multiple_faces: return "multiple_faces";
        case ExclusionReason::undetectable: return "undetectable";
    }
    return "undetectable";
}

namespace {

// Minimal RFC-4180 CSV line splitter (quotes, embedded commas, "" escapes).
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted)
        throw ManifestError("line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(cur);
    return fields;
}

bool is_md5_hex(const std::string& s) {
    if (s.size() != 32) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
    });
}

Gender parse_gender(const std::string& s, int line_no) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    throw ManifestError("line " + std::to_string(line_no) + ": unknown gender value '" + s + "'");
}

Race parse_race(const std::string& s, int line_no) {
    if (s == "white") return Race::white;
    if (s == "non_white") return Race::non_white;
    throw ManifestError("line " + std::to_string(line_no) + ": unknown race value '" + s + "'");
}

} // namespace

std::pair<std::vector<Identity>, std::vector<ImageRecord>>
ingest_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest: " + path);

    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw ManifestError("manifest is empty: " + path);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "image_id,file_path,md5,identity_id,gender,race")
        throw ManifestError("line 1: unexpected header '" + line + "'");

    std::vector<Identity> identities;
    std::vector<ImageRecord> records;
    std::unordered_map<std::string, std::size_t> identity_index;
    std::unordered_set<std::string> seen_image_ids;
    std::unordered_set<std::string> seen_checksums;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line, line_no);
        if (fields.size() != 6)
            throw ManifestError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                std::to_string(fields.size()));

        ImageRecord rec;
        rec.image_id = fields[0];
        rec.file_path = fields[1];
        rec.checksum = fields[2];
        rec.identity_id = fields[3];
        if (rec.image_id.empty() || rec.identity_id.empty())
            throw ManifestError("line " + std::to_string(line_no) + ": empty id field");
        if (!is_md5_hex(rec.checksum))
            throw ManifestError("line " + std::to_string(line_no) +
                                ": md5 must be a 32-hex-char digest");
        if (!seen_image_ids.insert(rec.image_id).second)
            throw ManifestError("line " + std::to_string(line_no) + ": duplicate image_id '" +
                                rec.image_id + "'");

        Gender g = parse_gender(fields[4], line_no);
        Race r = parse_race(fields[5], line_no);
        auto it = identity_index.find(rec.identity_id);
        if (it == identity_index.end()) {
            identity_index.emplace(rec.identity_id, identities.size());
            identities.push_back(Identity{rec.identity_id, g, r});
        } else {
            const Identity& known = identities[it->second];
            if (known.gender != g || known.race != r)
                throw ManifestError("line " + std::to_string(line_no) +
                                    ": conflicting attributes for identity '" +
                                    rec.identity_id + "'");
        }

        if (!seen_checksums.insert(rec.checksum).second) {
            rec.split = Split::excluded;
            rec.exclusion_reason = ExclusionReason::duplicate_checksum;
        }
        records.push_back(std::move(rec));
    }
    return {std::move(identities), std::move(records)};
}

std::vector<ImageRecord> filter_single_face(std::vector<ImageRecord> records,
                                            const DetectorFactory& make_detector,
                                            int workers, const WarnFn& warn) {
    if (workers < 1) workers = 1;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].retained()) todo.push_back(i);

    struct Outcome {
        std::optional<FaceBox> box;
        std::optional<ExclusionReason> reason;
        std::string warning;
    };
    std::vector<Outcome> outcomes(todo.size());

    std::vector<std::unique_ptr<Detector>> detectors;
    detectors.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) detectors.push_back(make_detector());

    parallel_for(todo.size(), workers, [&](int worker, std::size_t i) {
        const ImageRecord& rec = records[todo[i]];
        Outcome& out = outcomes[i];
        ImageBuffer img;
        try {
            img = read_image_file(rec.file_path);
        } catch (const ImageError& e) {
            // Undetectable rather than fatal: one bad file must not abort the batch.
            out.reason = ExclusionReason::zero_faces;
            out.warning = "image '" + rec.image_id + "' unreadable (" + e.what() +
                          "); excluded as zero_faces";
            return;
        }
        std::vector<FaceBox> boxes = detectors[static_cast<std::size_t>(worker)]->detect(img);
        if (boxes.size() == 1)
            out.box = boxes[0];
        else if (boxes.empty())
            out.reason = ExclusionReason::zero_faces;
        else
            out.reason = ExclusionReason::multiple_faces;
    });

    for (std::size_t i = 0; i < todo.size(); ++i) {
        ImageRecord& rec = records[todo[i]];
        const Outcome& out = outcomes[i];
        if (out.box) {
            rec.face_box = out.box;
        } else {
            rec.split = Split::excluded;
            rec.exclusion_reason = out.reason;
        }
        if (!out.warning.empty() && warn) warn(out.warning);
    }
    return records;
}

SplitPlan make_split(const std::vector<ImageRecord>& records, std::uint64_t seed,
                     const WarnFn& warn) {
    std::map<std::string, std::vector<std::string>> by_identity;
    for (const auto& rec : records)
        if (rec.retained()) by_identity[rec.identity_id].push_back(rec.image_id);

    SplitPlan plan;
    plan.seed = seed;
    for (auto& [identity_id, image_ids] : by_identity) {
        const std::size_t n = image_ids.size();
        if (n < 2) {
            if (warn)
                warn("identity '" + identity_id + "' has " + std::to_string(n) +
                     " retained image(s); excluded from the split");
            continue;
        }
        std::sort(image_ids.begin(), image_ids.end());
        SplitMix64 rng(mix64(seed, fnv1a64(identity_id)));
        deterministic_shuffle(image_ids, rng);

        // round(0.2*n) half up, in integer arithmetic; at least one per side.
        std::size_t n_test = std::max<std::size_t>(1, (2 * n + 5) / 10);
        SplitPlan::IdentitySplit split;
        split.test.assign(image_ids.begin(), image_ids.begin() + static_cast<long>(n_test));
        split.train.assign(image_ids.begin() + static_cast<long>(n_test), image_ids.end());
        std::sort(split.test.begin(), split.test.end());
        std::sort(split.train.begin(), split.train.end());
        plan.per_identity.emplace(identity_id, std::move(split));
    }
    return plan;
}

std::string SplitPlan::to_json_string() const {
    json identities = json::object();
    for (const auto& [id, split] : per_identity)
        identities[id] = json{{"train", split.train}, {"test", split.test}};
    json doc{{"seed", seed}, {"identities", identities}};
    return doc.dump(2);
}

SplitPlan SplitPlan::from_json_string(const std::string& text) {
    json doc = json::parse(text);
    SplitPlan plan;
    plan.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [id, split] : doc.at("identities").items()) {
        SplitPlan::IdentitySplit s;
        s.train = split.at("train").get<std::vector<std::string>>();
        s.test = split.at("test").get<std::vector<std::string>>();
        plan.per_identity.emplace(id, std::move(s));
    }
    return plan;
}

} // namespace obfair
