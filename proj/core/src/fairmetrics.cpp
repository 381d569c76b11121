#include "obfair/fairmetrics.hpp"

#include <algorithm>
#include <cmath>

namespace obfair {

Confusion build_confusion(const std::vector<std::string>& truth,
                          const std::vector<std::string>& predicted) {
    if (truth.size() != predicted.size())
        throw Error("truth and prediction lists differ in length");
    if (truth.empty()) throw Error("cannot build a confusion from zero predictions");
    Confusion conf;
    conf.total = static_cast<long long>(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        conf.per_class[truth[i]];
        conf.per_class[predicted[i]];
        if (truth[i] == predicted[i]) {
            ++conf.per_class[truth[i]].tp;
        } else {
            ++conf.per_class[truth[i]].fn;
            ++conf.per_class[predicted[i]].fp;
        }
    }
    return conf;
}

double pdr(const Confusion& conf, const std::set<std::string>& classes) {
    long long named = 0;
    for (const auto& cls : classes) {
        auto it = conf.per_class.find(cls);
        if (it == conf.per_class.end())
            throw Error("pdr: class '" + cls + "' not present in the confusion");
        named += it->second.predicted();
    }
    return static_cast<double>(named) / static_cast<double>(conf.total);
}

namespace {

struct PerClassMetrics {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

PerClassMetrics class_metrics(const Confusion::Counts& c, const std::string& cls,
                              std::vector<std::string>& warnings) {
    PerClassMetrics m;
    m.support = c.support();
    if (m.support > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(m.support);
    if (c.predicted() > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.predicted());
    } else if (m.support > 0) {
        warnings.push_back("class '" + cls + "' was never predicted; precision counted as 0");
    }
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

// Balanced accuracy is the unweighted mean of per-class recall (skipping
// zero-support classes); recall/precision/F1 are support-weighted means.
MetricBlock block_for(const Confusion& conf, const std::vector<std::string>& classes,
                      bool with_pdr, std::vector<std::string>& warnings) {
    MetricBlock b;
    double recall_sum = 0.0;
    long long recall_classes = 0;
    double w_recall = 0.0, w_precision = 0.0, w_f1 = 0.0;
    long long support_total = 0;
    long long predicted_total = 0;
    for (const auto& cls : classes) {
        const auto& counts = conf.per_class.at(cls);
        PerClassMetrics m = class_metrics(counts, cls, warnings);
        predicted_total += counts.predicted();
        if (m.support == 0) continue;
        recall_sum += m.recall;
        ++recall_classes;
        w_recall += m.recall * static_cast<double>(m.support);
        w_precision += m.precision * static_cast<double>(m.support);
        w_f1 += m.f1 * static_cast<double>(m.support);
        support_total += m.support;
    }
    if (recall_classes > 0) b.balanced_accuracy = recall_sum / static_cast<double>(recall_classes);
    if (support_total > 0) {
        b.recall = w_recall / static_cast<double>(support_total);
        b.precision = w_precision / static_cast<double>(support_total);
        b.f1 = w_f1 / static_cast<double>(support_total);
    }
    if (with_pdr)
        b.pdr = static_cast<double>(predicted_total) / static_cast<double>(conf.total);
    return b;
}

} // namespace

GroupReport group_metrics(const Confusion& conf, const Grouping& grouping,
                          const std::function<void(const std::string&)>& warn) {
    GroupReport report;
    report.grouping_name = grouping.name;

    std::map<std::string, std::vector<std::string>> classes_by_group;
    std::vector<std::string> all_classes;
    for (const auto& [cls, counts] : conf.per_class) {
        auto it = grouping.assignment.find(cls);
        if (it == grouping.assignment.end())
            throw Error("identity '" + cls + "' is missing from grouping '" + grouping.name + "'");
        classes_by_group[it->second].push_back(cls);
        all_classes.push_back(cls);
    }

    report.overall = block_for(conf, all_classes, /*with_pdr=*/false, report.warnings);
    for (const auto& [group, classes] : classes_by_group) {
        long long support = 0;
        for (const auto& cls : classes) support += conf.per_class.at(cls).support();
        if (support == 0) {
            report.warnings.push_back("group '" + group +
                                      "' has zero support; omitted from the report");
            continue;
        }
        report.groups.emplace_back(group,
                                   block_for(conf, classes, /*with_pdr=*/true, report.warnings));
    }
    if (warn)
        for (const auto& w : report.warnings) warn(w);
    return report;
}

const MetricBlock* GroupReport::find(const std::string& group) const {
    for (const auto& [label, block] : groups)
        if (label == group) return &block;
    return nullptr;
}

double MetricBlock::metric(const std::string& name) const {
    if (name == "balanced_accuracy") return balanced_accuracy;
    if (name == "recall") return recall;
    if (name == "precision") return precision;
    if (name == "f1") return f1;
    if (name == "pdr") return pdr.value_or(0.0);
    throw Error("unknown metric: " + name);
}

double BiasReport::metric(const std::string& name) const {
    if (name == "balanced_accuracy") return balanced_accuracy;
    if (name == "recall") return recall;
    if (name == "precision") return precision;
    if (name == "f1") return f1;
    if (name == "pdr") return pdr.value_or(0.0);
    throw Error("unknown metric: " + name);
}

BiasReport bias(const GroupReport& report) {
    if (report.groups.size() < 2)
        throw Error("bias needs at least 2 groups in the report");
    auto gap = [&](auto&& get) {
        double lo = 1e300, hi = -1e300;
        for (const auto& [label, block] : report.groups) {
            double v = get(block);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return hi - lo;
    };
    BiasReport b;
    b.balanced_accuracy = gap([](const MetricBlock& m) { return m.balanced_accuracy; });
    b.recall = gap([](const MetricBlock& m) { return m.recall; });
    b.precision = gap([](const MetricBlock& m) { return m.precision; });
    b.f1 = gap([](const MetricBlock& m) { return m.f1; });
    bool all_pdr = std::all_of(report.groups.begin(), report.groups.end(),
                               [](const auto& g) { return g.second.pdr.has_value(); });
    if (all_pdr) b.pdr = gap([](const MetricBlock& m) { return *m.pdr; });
    return b;
}

} // namespace obfair
