#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obfair/calib.hpp"
#include "obfair/classify.hpp"
#include "obfair/dataset.hpp"
#include "obfair/embed.hpp"
#include "obfair/fairmetrics.hpp"
#include "obfair/image.hpp"

namespace obfair {

struct DetectorBackendConfig {
    std::string backend = "oracle"; // "oracle" | "plugin"
    double contrast_threshold = 0.0;
    std::vector<std::string> command;
    double timeout_sec = 30.0;
};

struct EmbedderBackendConfig {
    std::string backend = "synthetic"; // "synthetic" | "plugin"
    SyntheticEmbedderConfig synthetic;
    // Which grouping keys obfuscation_noise: "race", "gender" or "race_gender".
    std::string noise_grouping = "race_gender";
    std::vector<std::string> command;
    double timeout_sec = 30.0;
};

struct ClassifierChoice {
    ClassifierSpec spec;
    bool grid = false; // replace spec by the default-grid search winner
};

/// Everything one experiment needs, loadable from a single JSON document.
struct RunConfig {
    std::string manifest;
    std::uint64_t seed = 0;
    std::vector<ObfuscationMethod> methods;
    std::vector<ClassifierChoice> classifiers;
    DetectorBackendConfig detector;
    EmbedderBackendConfig embedder;
    std::string output_dir;
    int workers = 1;

    void validate() const;
    std::string to_json_string() const;
    static RunConfig from_json_string(const std::string& text);
    static RunConfig load(const std::string& path);

    /// FNV-1a of the canonical JSON form; stamped into every artifact.
    std::string digest() const;
};

/// One (method, classifier) result set kept in memory for callers; the same
/// content is persisted under output_dir.
struct RunReport {
    ObfuscationMethod method;
    std::string classifier_tag;
    ClassifierSpec spec;
    GroupReport race;
    GroupReport gender;
    GroupReport intersection;
    // Absent when the cohort has fewer than two intersectional groups.
    std::optional<BiasReport> bias_gaps;
};

struct RunArtifacts {
    std::string output_dir;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<std::string> files; // relative to output_dir
    std::vector<RunReport> reports;
    std::map<std::string, std::vector<ObfuscationLevel>> calibration; // by method name
};

/// Execute the whole experiment: ingest, filter, split, calibrate and
/// obfuscate the test set, embed both sets, then train/predict/report per
/// (method, classifier) pair. Throws ConfigError for bad configs and
/// StageError for unrecoverable stage failures; on stage failure a FAILED
/// marker naming the stage is left in the output directory.
RunArtifacts run(const RunConfig& config);

/// Rebuild group/bias reports from persisted predictions; returns the
/// CSV-formatted tables it (re)wrote, keyed by report file name.
std::map<std::string, std::string> rebuild_reports(const std::string& artifacts_dir);

/// Emit plot-ready CSVs from persisted artifacts: per-group histograms and
/// five-number summaries of normalized levels, plus a per-classifier bias
/// summary per method. Returns relative paths written.
std::vector<std::string> emit_plot_data(const std::string& artifacts_dir);

/// Paper-style table rows: Overall, race, gender, the four intersections,
/// then the Bias row. Columns: Balanced Accuracy, Recall, Precision,
/// F1-score, PDR (PDR empty for Overall).
std::string report_to_csv(const RunReport& report, std::uint64_t seed,
                          const std::string& digest);

} // namespace obfair
