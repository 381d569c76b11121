#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "obfair/errors.hpp"

namespace obfair {

/// Multi-class confusion counts. For every prediction, exactly one class
/// gains a TP (correct) or one class gains an FP (the predicted one), and
/// mistakes also charge an FN to the true class; so sum(TP)+sum(FP) =
/// sum(TP)+sum(FN) = N.
struct Confusion {
    struct Counts {
        long long tp = 0;
        long long fp = 0;
        long long fn = 0;

        long long support() const { return tp + fn; }
        long long predicted() const { return tp + fp; }
    };
    std::map<std::string, Counts> per_class;
    long long total = 0;
};

Confusion build_confusion(const std::vector<std::string>& truth,
                          const std::vector<std::string>& predicted);

/// Partition of identities into group labels (race, gender, or their
/// intersection). Must cover every identity it is applied to.
struct Grouping {
    std::string name;
    std::map<std::string, std::string> assignment; // identity -> group label
};

struct MetricBlock {
    double balanced_accuracy = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    std::optional<double> pdr; // omitted for the Overall block

    double metric(const std::string& name) const;
};

/// Per-group metric blocks plus the all-classes Overall block. Group
/// metrics restrict the class set but keep N and the full-run FP counts:
/// an FP naming an identity counts toward that identity's group no matter
/// whose image it was, which is what makes group PDRs a partition of 1.
struct GroupReport {
    std::string grouping_name;
    MetricBlock overall;
    std::vector<std::pair<std::string, MetricBlock>> groups; // ordered by label
    std::vector<std::string> warnings;

    const MetricBlock* find(const std::string& group) const;
};

GroupReport group_metrics(const Confusion& conf, const Grouping& grouping,
                          const std::function<void(const std::string&)>& warn = nullptr);

/// Personal detection rate of a class subset: how often anyone in the
/// subset is named by the attacker, correctly or not.
double pdr(const Confusion& conf, const std::set<std::string>& classes);

/// Largest per-metric gap (max - min) across the report's groups.
struct BiasReport {
    double balanced_accuracy = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    std::optional<double> pdr;

    double metric(const std::string& name) const;
};

BiasReport bias(const GroupReport& report);

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"balanced_accuracy", "recall", "precision",
                                                "f1", "pdr"};
    return names;
}

} // namespace obfair
