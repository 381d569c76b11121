#include "obfair/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "obfair/codec.hpp"
#include "obfair/parallel.hpp"
#include "obfair/rng.hpp"

namespace obfair {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

class RunLog {
public:
    explicit RunLog(const std::string& path) : out_(path, std::ios::trunc) {}

    void line(const std::string& stage, const std::string& msg) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
        out_ << stamp << " [" << stage << "] " << msg << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

json metric_block_to_json(const MetricBlock& b) {
    json j{{"balanced_accuracy", b.balanced_accuracy},
           {"recall", b.recall},
           {"precision", b.precision},
           {"f1", b.f1}};
    if (b.pdr) j["pdr"] = *b.pdr;
    return j;
}

json group_report_to_json(const GroupReport& r) {
    json groups = json::object();
    for (const auto& [label, block] : r.groups) groups[label] = metric_block_to_json(block);
    return groups;
}

json detector_to_json(const DetectorBackendConfig& d) {
    json j{{"backend", d.backend}};
    if (d.backend == "oracle") j["contrast_threshold"] = d.contrast_threshold;
    if (d.backend == "plugin") {
        j["command"] = d.command;
        j["timeout_sec"] = d.timeout_sec;
    }
    return j;
}

json embedder_to_json(const EmbedderBackendConfig& e) {
    json j{{"backend", e.backend}};
    if (e.backend == "synthetic") {
        j["seed"] = e.synthetic.seed;
        j["identity_scale"] = e.synthetic.identity_scale;
        j["noise_scale"] = e.synthetic.noise_scale;
        j["obfuscation_noise"] = e.synthetic.obfuscation_noise;
        j["noise_grouping"] = e.noise_grouping;
    }
    if (e.backend == "plugin") {
        j["command"] = e.command;
        j["timeout_sec"] = e.timeout_sec;
    }
    return j;
}

json config_to_json(const RunConfig& c) {
    json methods = json::array();
    for (auto m : c.methods) methods.push_back(to_string(m));
    json classifiers = json::array();
    for (const auto& choice : c.classifiers) {
        json spec = json::parse(choice.spec.to_json_string());
        spec["grid_search"] = choice.grid;
        classifiers.push_back(spec);
    }
    return json{{"manifest", c.manifest}, {"seed", c.seed},
                {"methods", methods},     {"classifiers", classifiers},
                {"detector", detector_to_json(c.detector)},
                {"embedder", embedder_to_json(c.embedder)},
                {"output_dir", c.output_dir},
                {"workers", c.workers}};
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    try {
        c.manifest = j.at("manifest").get<std::string>();
        c.seed = j.value("seed", std::uint64_t{0});
        for (const auto& m : j.at("methods"))
            c.methods.push_back(obfuscation_method_from_string(m.get<std::string>()));
        for (const auto& spec : j.at("classifiers")) {
            ClassifierChoice choice;
            choice.grid = spec.value("grid_search", false);
            choice.spec = ClassifierSpec::from_json_string(spec.dump());
            c.classifiers.push_back(choice);
        }
        const json& d = j.at("detector");
        c.detector.backend = d.at("backend").get<std::string>();
        c.detector.contrast_threshold = d.value("contrast_threshold", 0.0);
        if (d.contains("command"))
            c.detector.command = d["command"].get<std::vector<std::string>>();
        c.detector.timeout_sec = d.value("timeout_sec", 30.0);
        const json& e = j.at("embedder");
        c.embedder.backend = e.at("backend").get<std::string>();
        if (c.embedder.backend == "synthetic") {
            c.embedder.synthetic.seed = e.value("seed", std::uint64_t{0});
            c.embedder.synthetic.identity_scale = e.value("identity_scale", 1.0);
            c.embedder.synthetic.noise_scale = e.value("noise_scale", 0.0);
            if (e.contains("obfuscation_noise"))
                c.embedder.synthetic.obfuscation_noise =
                    e["obfuscation_noise"].get<std::map<std::string, double>>();
            c.embedder.noise_grouping = e.value("noise_grouping", std::string("race_gender"));
        }
        if (e.contains("command"))
            c.embedder.command = e["command"].get<std::vector<std::string>>();
        c.embedder.timeout_sec = e.value("timeout_sec", 30.0);
        c.output_dir = j.at("output_dir").get<std::string>();
        c.workers = j.value("workers", 1);
    } catch (const json::exception& err) {
        throw ConfigError(std::string("bad run config: ") + err.what());
    }
    c.validate();
    return c;
}

std::string group_label(const Identity& ident, const std::string& grouping) {
    if (grouping == "race") return to_string(ident.race);
    if (grouping == "gender") return to_string(ident.gender);
    if (grouping == "race_gender")
        return to_string(ident.race) + "_" + to_string(ident.gender);
    throw ConfigError("unknown grouping: " + grouping);
}

struct Groupings {
    Grouping race;
    Grouping gender;
    Grouping intersection;
};

Groupings make_groupings(const std::vector<Identity>& identities) {
    Groupings g;
    g.race.name = "race";
    g.gender.name = "gender";
    g.intersection.name = "race_gender";
    for (const auto& ident : identities) {
        g.race.assignment[ident.identity_id] = group_label(ident, "race");
        g.gender.assignment[ident.identity_id] = group_label(ident, "gender");
        g.intersection.assignment[ident.identity_id] = group_label(ident, "race_gender");
    }
    return g;
}

DetectorFactory make_detector_factory(const DetectorBackendConfig& cfg) {
    if (cfg.backend == "oracle") {
        OracleDetectorConfig ocfg{cfg.contrast_threshold};
        return [ocfg] { return std::make_unique<OracleDetector>(ocfg); };
    }
    if (cfg.backend == "plugin") {
        auto command = cfg.command;
        double timeout = cfg.timeout_sec;
        return [command, timeout]() -> std::unique_ptr<Detector> {
            return std::make_unique<PluginDetector>(
                std::make_shared<PluginClient>(command, timeout));
        };
    }
    throw ConfigError("unknown detector backend: " + cfg.backend);
}

// Transport errors get one retry on a fresh backend instance before failing.
template <typename T, typename Make, typename Fn>
auto with_plugin_retry(std::unique_ptr<T>& slot, const Make& make, RunLog* log,
                       const std::string& stage, Fn&& fn) {
    try {
        return fn(*slot);
    } catch (const TransportError& e) {
        if (log) log->line(stage, std::string("transport error, retrying once: ") + e.what());
        slot = make();
        return fn(*slot);
    }
}

struct ArtifactWriter {
    fs::path dir;
    std::uint64_t seed;
    std::string digest;
    std::vector<std::string>* files;

    json header() const { return json{{"seed", seed}, {"config_digest", digest}}; }

    void write_text(const std::string& rel, const std::string& text) const {
        std::ofstream out(dir / rel, std::ios::trunc | std::ios::binary);
        if (!out) throw Error("cannot write artifact: " + rel);
        out << text;
        if (files) files->push_back(rel);
    }

    void write_json(const std::string& rel, json doc) const {
        doc["seed"] = seed;
        doc["config_digest"] = digest;
        write_text(rel, doc.dump(2) + "\n");
    }

    void write_jsonl(const std::string& rel, const std::vector<json>& lines) const {
        std::string text = header().dump() + "\n";
        for (const auto& l : lines) text += l.dump() + "\n";
        write_text(rel, text);
    }
};

} // namespace

void RunConfig::validate() const {
    if (manifest.empty()) throw ConfigError("config needs a manifest path");
    if (output_dir.empty()) throw ConfigError("config needs an output_dir");
    if (methods.empty()) throw ConfigError("config needs at least one obfuscation method");
    if (classifiers.empty()) throw ConfigError("config needs at least one classifier");
    for (const auto& c : classifiers) c.spec.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (detector.backend != "oracle" && detector.backend != "plugin")
        throw ConfigError("unknown detector backend: " + detector.backend);
    if (detector.backend == "plugin" && detector.command.empty())
        throw ConfigError("plugin detector needs a command");
    if (detector.backend == "oracle" && detector.contrast_threshold < 0.0)
        throw ConfigError("oracle detector threshold must be >= 0");
    if (embedder.backend != "synthetic" && embedder.backend != "plugin")
        throw ConfigError("unknown embedder backend: " + embedder.backend);
    if (embedder.backend == "plugin" && embedder.command.empty())
        throw ConfigError("plugin embedder needs a command");
    if (embedder.backend == "synthetic") {
        embedder.synthetic.validate();
        if (embedder.noise_grouping != "race" && embedder.noise_grouping != "gender" &&
            embedder.noise_grouping != "race_gender")
            throw ConfigError("unknown noise_grouping: " + embedder.noise_grouping);
    }
    std::set<ObfuscationMethod> seen(methods.begin(), methods.end());
    if (seen.size() != methods.size())
        throw ConfigError("duplicate obfuscation method in config");
}

std::string RunConfig::to_json_string() const { return config_to_json(*this).dump(2); }

RunConfig RunConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

std::string RunConfig::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(*this).dump())));
    return buf;
}

std::string report_to_csv(const RunReport& report, std::uint64_t seed,
                          const std::string& digest) {
    std::string csv = "# seed=" + std::to_string(seed) + " config_digest=" + digest + "\n";
    csv += "Group,Balanced Accuracy,Recall,Precision,F1-score,PDR\n";

    auto row = [&](const std::string& label, const MetricBlock* b) {
        csv += label;
        if (b) {
            csv += ',' + fmt6(b->balanced_accuracy) + ',' + fmt6(b->recall) + ',' +
                   fmt6(b->precision) + ',' + fmt6(b->f1) + ',';
            if (b->pdr) csv += fmt6(*b->pdr);
        } else {
            csv += ",,,,,";
        }
        csv += '\n';
    };

    row("Overall", &report.race.overall);
    row("White", report.race.find("white"));
    row("Non-White", report.race.find("non_white"));
    row("Male", report.gender.find("male"));
    row("Female", report.gender.find("female"));
    row("Non-White Female", report.intersection.find("non_white_female"));
    row("Non-White Male", report.intersection.find("non_white_male"));
    row("White Female", report.intersection.find("white_female"));
    row("White Male", report.intersection.find("white_male"));
    if (report.bias_gaps) {
        const BiasReport& b = *report.bias_gaps;
        csv += "Bias," + fmt6(b.balanced_accuracy) + ',' + fmt6(b.recall) + ',' +
               fmt6(b.precision) + ',' + fmt6(b.f1) + ',';
        if (b.pdr) csv += fmt6(*b.pdr);
        csv += '\n';
    }
    return csv;
}

namespace {

json run_report_to_json(const RunReport& r) {
    json j{{"method", to_string(r.method)},
           {"classifier", r.classifier_tag},
           {"spec", json::parse(r.spec.to_json_string())},
           {"overall", metric_block_to_json(r.race.overall)},
           {"race", group_report_to_json(r.race)},
           {"gender", group_report_to_json(r.gender)},
           {"race_gender", group_report_to_json(r.intersection)}};
    if (r.bias_gaps) {
        json b{{"balanced_accuracy", r.bias_gaps->balanced_accuracy},
               {"recall", r.bias_gaps->recall},
               {"precision", r.bias_gaps->precision},
               {"f1", r.bias_gaps->f1}};
        if (r.bias_gaps->pdr) b["pdr"] = *r.bias_gaps->pdr;
        j["bias"] = b;
    }
    std::vector<std::string> warnings = r.race.warnings;
    warnings.insert(warnings.end(), r.gender.warnings.begin(), r.gender.warnings.end());
    warnings.insert(warnings.end(), r.intersection.warnings.begin(),
                    r.intersection.warnings.end());
    j["warnings"] = warnings;
    return j;
}

json level_to_json(const ObfuscationLevel& lvl) {
    return json{{"image_id", lvl.image_id},
                {"method", to_string(lvl.method)},
                {"strength", lvl.strength.value},
                {"normalized", lvl.normalized},
                {"flag", to_string(lvl.flag)}};
}

json stats_to_json(const LevelStats& st) {
    return json{{"count", st.count}, {"min", st.min},       {"q1", st.q1},
                {"median", st.median}, {"q3", st.q3},       {"max", st.max}};
}

// Unique artifact tags when the same classifier kind appears twice.
std::vector<std::string> classifier_tags(const std::vector<ClassifierChoice>& choices) {
    std::map<std::string, int> counts;
    for (const auto& c : choices) counts[to_string(c.spec.kind)]++;
    std::map<std::string, int> seen;
    std::vector<std::string> tags;
    for (const auto& c : choices) {
        std::string base = to_string(c.spec.kind);
        int idx = ++seen[base];
        tags.push_back(counts[base] > 1 ? base + "_" + std::to_string(idx) : base);
    }
    return tags;
}

} // namespace

RunArtifacts run(const RunConfig& config) {
    config.validate();

    RunArtifacts artifacts;
    artifacts.output_dir = config.output_dir;
    artifacts.seed = config.seed;
    artifacts.config_digest = config.digest();

    fs::create_directories(config.output_dir);
    const fs::path out_dir(config.output_dir);
    std::error_code ec;
    fs::remove(out_dir / "FAILED", ec);

    RunLog log((out_dir / "run.log").string());
    ArtifactWriter writer{out_dir, config.seed, artifacts.config_digest, &artifacts.files};
    artifacts.files.push_back("run.log");

    std::string stage = "config";
    try {
        writer.write_json("run_meta.json", json{{"config", config_to_json(config)}});
        log.line("config", "digest " + artifacts.config_digest);

        // 1. Ingest and deduplicate.
        stage = "ingest";
        auto [identities, records] = ingest_manifest(config.manifest);
        log.line(stage, std::to_string(records.size()) + " records, " +
                            std::to_string(identities.size()) + " identities");

        // 2. Keep only single-face images.
        stage = "filter";
        DetectorFactory detector_factory = make_detector_factory(config.detector);
        records = filter_single_face(records, detector_factory, config.workers,
                                     [&](const std::string& w) { log.line(stage, w); });
        std::map<std::string, long long> excluded;
        long long retained = 0;
        for (const auto& r : records) {
            if (r.retained()) ++retained;
            else ++excluded[to_string(*r.exclusion_reason)];
        }
        log.line(stage, std::to_string(retained) + " retained");
        for (const auto& [reason, count] : excluded)
            log.line(stage, std::to_string(count) + " excluded: " + reason);

        // 3. Seeded per-identity 80/20 split.
        stage = "split";
        SplitPlan plan = make_split(records, config.seed,
                                    [&](const std::string& w) { log.line(stage, w); });
        writer.write_json("split_plan.json",
                          json::parse(plan.to_json_string()));

        std::map<std::string, const Identity*> identity_by_id;
        for (const auto& ident : identities) identity_by_id[ident.identity_id] = &ident;
        std::map<std::string, const ImageRecord*> record_by_id;
        for (auto& rec : records) record_by_id[rec.image_id] = &rec;

        std::vector<const ImageRecord*> train_recs, test_recs;
        for (const auto& [identity_id, split] : plan.per_identity) {
            for (const auto& id : split.train) train_recs.push_back(record_by_id.at(id));
            for (const auto& id : split.test) test_recs.push_back(record_by_id.at(id));
        }
        auto by_image_id = [](const ImageRecord* a, const ImageRecord* b) {
            return a->image_id < b->image_id;
        };
        std::sort(train_recs.begin(), train_recs.end(), by_image_id);
        std::sort(test_recs.begin(), test_recs.end(), by_image_id);
        if (train_recs.empty() || test_recs.empty())
            throw Error("split produced an empty train or test set");
        log.line(stage, std::to_string(train_recs.size()) + " train / " +
                            std::to_string(test_recs.size()) + " test images");

        {
            std::set<std::string> train_ids;
            for (const auto* r : train_recs) train_ids.insert(r->image_id);
            for (const auto* r : test_recs)
                if (train_ids.count(r->image_id))
                    throw Error("train/test leakage: image '" + r->image_id +
                                "' appears on both sides");
        }

        json identities_doc = json::object();
        for (const auto& ident : identities)
            identities_doc[ident.identity_id] = json{{"gender", to_string(ident.gender)},
                                                     {"race", to_string(ident.race)}};
        writer.write_json("identities.json", json{{"identities", identities_doc}});

        json records_doc = json::array();
        for (const auto& rec : records) {
            json r{{"image_id", rec.image_id},   {"file_path", rec.file_path},
                   {"checksum", rec.checksum},   {"identity_id", rec.identity_id},
                   {"split", to_string(rec.split)}};
            if (rec.face_box)
                r["face_box"] = json{{"x", rec.face_box->x}, {"y", rec.face_box->y},
                                     {"w", rec.face_box->w}, {"h", rec.face_box->h}};
            if (rec.exclusion_reason) r["exclusion_reason"] = to_string(*rec.exclusion_reason);
            records_doc.push_back(std::move(r));
        }

        const Groupings groupings = make_groupings(identities);
        const bool plugin_embedder = config.embedder.backend == "plugin";

        auto make_embed_client = [&]() {
            return std::make_unique<PluginClient>(config.embedder.command,
                                                  config.embedder.timeout_sec);
        };

        auto noise_group_of = [&](const std::string& identity_id) {
            return group_label(*identity_by_id.at(identity_id), config.embedder.noise_grouping);
        };

        // 4. Clean-image encodings for the training side (method-independent).
        stage = "embed_train";
        std::vector<Encoding> train_encodings(train_recs.size());
        if (plugin_embedder) {
            std::vector<std::unique_ptr<PluginClient>> clients(
                static_cast<std::size_t>(config.workers));
            for (auto& c : clients) c = make_embed_client();
            parallel_for(train_recs.size(), config.workers, [&](int w, std::size_t i) {
                const ImageRecord* rec = train_recs[i];
                ImageBuffer img = read_image_file(rec->file_path);
                train_encodings[i] = with_plugin_retry(
                    clients[static_cast<std::size_t>(w)], make_embed_client, &log, stage,
                    [&](PluginClient& client) {
                        return subprocess_embed(client, img, *rec->face_box, rec->image_id);
                    });
            });
        } else {
            for (std::size_t i = 0; i < train_recs.size(); ++i) {
                const ImageRecord* rec = train_recs[i];
                train_encodings[i] =
                    synthetic_embed(config.embedder.synthetic, rec->identity_id, rec->image_id,
                                    noise_group_of(rec->identity_id), /*is_obfuscated=*/false);
            }
        }
        {
            std::vector<json> lines;
            for (std::size_t i = 0; i < train_recs.size(); ++i)
                lines.push_back(json{{"image_id", train_recs[i]->image_id},
                                     {"obfuscated", false},
                                     {"vector", train_encodings[i].vector}});
            writer.write_jsonl("encodings_train.jsonl", lines);
        }
        log.line(stage, std::to_string(train_encodings.size()) + " encodings");

        TrainingSet train_set;
        for (std::size_t i = 0; i < train_recs.size(); ++i) {
            train_set.vectors.emplace_back(train_encodings[i].vector.begin(),
                                           train_encodings[i].vector.end());
            train_set.labels.push_back(train_recs[i]->identity_id);
        }

        const std::vector<std::string> tags = classifier_tags(config.classifiers);

        for (ObfuscationMethod method : config.methods) {
            const std::string mname = to_string(method);

            // 5. Per-image maximal detectable obfuscation on the test set,
            //    then encodings of the obfuscated images.
            stage = "calibrate_" + mname;
            std::vector<ObfuscationLevel> levels(test_recs.size());
            std::vector<Encoding> test_encodings(test_recs.size());
            {
                std::vector<std::unique_ptr<Detector>> detectors(
                    static_cast<std::size_t>(config.workers));
                for (auto& d : detectors) d = detector_factory();
                std::vector<std::unique_ptr<PluginClient>> embed_clients(
                    static_cast<std::size_t>(plugin_embedder ? config.workers : 0));
                for (auto& c : embed_clients) c = make_embed_client();

                parallel_for(test_recs.size(), config.workers, [&](int w, std::size_t i) {
                    const ImageRecord* rec = test_recs[i];
                    const std::size_t wi = static_cast<std::size_t>(w);
                    ImageBuffer img = read_image_file(rec->file_path);
                    levels[i] = with_plugin_retry(
                        detectors[wi], detector_factory, &log, stage, [&](Detector& det) {
                            return calibrate(img, *rec->face_box, method, det, rec->image_id);
                        });
                    if (plugin_embedder) {
                        ImageBuffer obf = apply_obfuscation(img, *rec->face_box, method,
                                                            levels[i].strength.value);
                        test_encodings[i] = with_plugin_retry(
                            embed_clients[wi], make_embed_client, &log, stage,
                            [&](PluginClient& client) {
                                return subprocess_embed(client, obf, *rec->face_box,
                                                        rec->image_id);
                            });
                    }
                });
            }
            if (!plugin_embedder) {
                for (std::size_t i = 0; i < test_recs.size(); ++i) {
                    const ImageRecord* rec = test_recs[i];
                    test_encodings[i] =
                        synthetic_embed(config.embedder.synthetic, rec->identity_id,
                                        rec->image_id, noise_group_of(rec->identity_id),
                                        /*is_obfuscated=*/true);
                }
            }

            artifacts.calibration[mname] = levels;
            {
                std::vector<json> lines;
                for (const auto& lvl : levels) lines.push_back(level_to_json(lvl));
                writer.write_jsonl("calibration_" + mname + ".jsonl", lines);
                std::map<std::string, long long> flags;
                long long calls = 0;
                for (const auto& lvl : levels) {
                    ++flags[to_string(lvl.flag)];
                    calls += lvl.detector_calls;
                }
                for (const auto& [flag, count] : flags)
                    log.line(stage, std::to_string(count) + " x " + flag);
                log.line(stage, std::to_string(calls) + " detector calls total");
            }
            {
                std::vector<json> lines;
                for (std::size_t i = 0; i < test_recs.size(); ++i)
                    lines.push_back(json{{"image_id", test_recs[i]->image_id},
                                         {"obfuscated", true},
                                         {"vector", test_encodings[i].vector}});
                writer.write_jsonl("encodings_test_" + mname + ".jsonl", lines);
            }

            // Normalized-level spread per grouping.
            stage = "level_stats_" + mname;
            json stats_doc = json::object();
            for (const std::string& gname : {std::string("race"), std::string("gender"),
                                             std::string("race_gender")}) {
                std::map<std::string, std::string> image_group;
                for (const auto* rec : test_recs)
                    image_group[rec->image_id] =
                        group_label(*identity_by_id.at(rec->identity_id), gname);
                auto stats = level_statistics(levels, image_group, [&](const std::string& w) {
                    log.line(stage, w);
                });
                json per_group = json::object();
                for (const auto& [group, st] : stats) per_group[group] = stats_to_json(st);
                stats_doc[gname] = per_group;
            }
            writer.write_json("level_stats_" + mname + ".json",
                              json{{"method", mname}, {"groupings", stats_doc}});

            // 6. Train on clean encodings, predict the obfuscated ones, report.
            std::vector<FeatureVector> queries;
            std::vector<std::string> truth;
            for (std::size_t i = 0; i < test_recs.size(); ++i) {
                queries.emplace_back(test_encodings[i].vector.begin(),
                                     test_encodings[i].vector.end());
                truth.push_back(test_recs[i]->identity_id);
            }

            for (std::size_t ci = 0; ci < config.classifiers.size(); ++ci) {
                const std::string& tag = tags[ci];
                stage = "classify_" + mname + "_" + tag;
                ClassifierSpec spec = config.classifiers[ci].spec;
                if (config.classifiers[ci].grid) {
                    spec = grid_search(spec.kind, default_grid(spec.kind), train_set);
                    log.line(stage, "grid search chose " + spec.to_json_string());
                }
                TrainedModel model = train(spec, train_set);
                writer.write_json("model_" + mname + "_" + tag + ".json",
                                  json{{"model", json::parse(model.to_json_string())}});

                std::vector<std::string> predicted = predict(model, queries);
                if (predicted.size() != test_recs.size())
                    throw Error("prediction count does not match test set size");
                {
                    std::vector<json> lines;
                    for (std::size_t i = 0; i < predicted.size(); ++i)
                        lines.push_back(json{{"image_id", test_recs[i]->image_id},
                                             {"truth", truth[i]},
                                             {"predicted", predicted[i]}});
                    writer.write_jsonl("predictions_" + mname + "_" + tag + ".jsonl", lines);
                }

                Confusion conf = build_confusion(truth, predicted);
                RunReport report;
                report.method = method;
                report.classifier_tag = tag;
                report.spec = spec;
                auto warn = [&](const std::string& w) { log.line(stage, w); };
                report.race = group_metrics(conf, groupings.race, warn);
                report.gender = group_metrics(conf, groupings.gender, warn);
                report.intersection = group_metrics(conf, groupings.intersection, warn);
                if (report.intersection.groups.size() >= 2) {
                    report.bias_gaps = bias(report.intersection);
                } else {
                    log.line(stage, "fewer than 2 intersectional groups; bias row omitted");
                }

                writer.write_json("report_" + mname + "_" + tag + ".json",
                                  run_report_to_json(report));
                writer.write_text("report_" + mname + "_" + tag + ".csv",
                                  report_to_csv(report, config.seed, artifacts.config_digest));
                log.line(stage, "report written");
                artifacts.reports.push_back(std::move(report));
            }
        }

        // Final record states (with split assignments known).
        for (auto& r : records_doc) {
            const ImageRecord* rec = record_by_id.at(r["image_id"].get<std::string>());
            if (rec->split == Split::pending) {
                bool in_train = false, in_test = false;
                auto it = plan.per_identity.find(rec->identity_id);
                if (it != plan.per_identity.end()) {
                    in_train = std::binary_search(it->second.train.begin(),
                                                  it->second.train.end(), rec->image_id);
                    in_test = std::binary_search(it->second.test.begin(),
                                                 it->second.test.end(), rec->image_id);
                }
                r["split"] = in_train ? "train" : (in_test ? "test" : "pending");
            }
        }
        writer.write_json("records.json", json{{"records", records_doc}});

        std::sort(artifacts.files.begin(), artifacts.files.end());
        log.line("done", "run complete");
        return artifacts;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        log.line(stage, std::string("FAILED: ") + e.what());
        std::ofstream marker(out_dir / "FAILED", std::ios::trunc);
        marker << stage << ": " << e.what() << "\n";
        throw StageError(stage, e.what());
    }
}

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open artifact: " + path.string());
    json j;
    in >> j;
    return j;
}

std::vector<json> read_jsonl_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open artifact: " + path.string());
    std::vector<json> lines;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        if (first) {
            first = false;
            if (j.contains("config_digest") && !j.contains("image_id")) continue; // header
        }
        lines.push_back(std::move(j));
    }
    return lines;
}

std::vector<Identity> load_identities(const fs::path& dir) {
    json doc = read_json_file(dir / "identities.json");
    std::vector<Identity> out;
    for (const auto& [id, attrs] : doc.at("identities").items()) {
        Identity ident;
        ident.identity_id = id;
        ident.gender = attrs.at("gender").get<std::string>() == "male" ? Gender::male
                                                                       : Gender::female;
        ident.race = attrs.at("race").get<std::string>() == "white" ? Race::white
                                                                    : Race::non_white;
        out.push_back(std::move(ident));
    }
    return out;
}

struct MethodClassifier {
    std::string method;
    std::string tag;
};

std::vector<MethodClassifier> find_prediction_sets(const fs::path& dir) {
    std::vector<MethodClassifier> out;
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("predictions_", 0) == 0 && name.size() > 18 &&
            name.substr(name.size() - 6) == ".jsonl")
            names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        std::string stem = name.substr(12, name.size() - 12 - 6);
        // method names contain '_' (gaussian_blur), so match known prefixes
        for (const std::string& m : {std::string("gaussian_blur"), std::string("pixelation")}) {
            if (stem.rfind(m + "_", 0) == 0) {
                out.push_back({m, stem.substr(m.size() + 1)});
                break;
            }
        }
    }
    return out;
}

} // namespace

std::map<std::string, std::string> rebuild_reports(const std::string& artifacts_dir) {
    const fs::path dir(artifacts_dir);
    json meta = read_json_file(dir / "run_meta.json");
    const std::uint64_t seed = meta.at("seed").get<std::uint64_t>();
    const std::string digest = meta.at("config_digest").get<std::string>();

    const std::vector<Identity> identities = load_identities(dir);
    const Groupings groupings = make_groupings(identities);

    std::map<std::string, std::string> rebuilt;
    for (const auto& mc : find_prediction_sets(dir)) {
        auto lines = read_jsonl_file(dir / ("predictions_" + mc.method + "_" + mc.tag + ".jsonl"));
        std::vector<std::string> truth, predicted;
        for (const auto& l : lines) {
            truth.push_back(l.at("truth").get<std::string>());
            predicted.push_back(l.at("predicted").get<std::string>());
        }
        if (truth.empty()) throw Error("empty prediction set for " + mc.method + "/" + mc.tag);

        Confusion conf = build_confusion(truth, predicted);
        RunReport report;
        report.method = obfuscation_method_from_string(mc.method);
        report.classifier_tag = mc.tag;
        json model_doc = read_json_file(dir / ("model_" + mc.method + "_" + mc.tag + ".json"));
        report.spec = ClassifierSpec::from_json_string(
            model_doc.at("model").at("hyperparameters").dump());
        report.race = group_metrics(conf, groupings.race);
        report.gender = group_metrics(conf, groupings.gender);
        report.intersection = group_metrics(conf, groupings.intersection);
        if (report.intersection.groups.size() >= 2) report.bias_gaps = bias(report.intersection);

        ArtifactWriter writer{dir, seed, digest, nullptr};
        writer.write_json("report_" + mc.method + "_" + mc.tag + ".json",
                          run_report_to_json(report));
        std::string csv = report_to_csv(report, seed, digest);
        writer.write_text("report_" + mc.method + "_" + mc.tag + ".csv", csv);
        rebuilt["report_" + mc.method + "_" + mc.tag + ".csv"] = csv;
    }
    if (rebuilt.empty()) throw Error("no prediction artifacts found in " + artifacts_dir);
    return rebuilt;
}

std::vector<std::string> emit_plot_data(const std::string& artifacts_dir) {
    const fs::path dir(artifacts_dir);
    json meta = read_json_file(dir / "run_meta.json");
    const std::uint64_t seed = meta.at("seed").get<std::uint64_t>();
    const std::string digest = meta.at("config_digest").get<std::string>();

    const std::vector<Identity> identities = load_identities(dir);
    std::map<std::string, const Identity*> identity_by_id;
    for (const auto& ident : identities) identity_by_id[ident.identity_id] = &ident;

    json records_doc = read_json_file(dir / "records.json");
    std::map<std::string, std::string> image_identity;
    for (const auto& r : records_doc.at("records"))
        image_identity[r.at("image_id").get<std::string>()] =
            r.at("identity_id").get<std::string>();

    std::vector<std::string> written;
    ArtifactWriter writer{dir, seed, digest, &written};

    for (const std::string& mname : {std::string("gaussian_blur"), std::string("pixelation")}) {
        const fs::path calib_path = dir / ("calibration_" + mname + ".jsonl");
        if (!fs::exists(calib_path)) continue;
        auto lines = read_jsonl_file(calib_path);
        if (lines.empty()) throw Error("calibration file has no records: " + calib_path.string());
        std::vector<ObfuscationLevel> levels;
        for (const auto& l : lines) {
            ObfuscationLevel lvl;
            lvl.image_id = l.at("image_id").get<std::string>();
            lvl.normalized = l.at("normalized").get<double>();
            levels.push_back(std::move(lvl));
        }

        for (const std::string& gname : {std::string("race"), std::string("gender"),
                                         std::string("race_gender")}) {
            std::map<std::string, std::vector<double>> values;
            double max_value = 0.0;
            for (const auto& lvl : levels) {
                const Identity* ident = identity_by_id.at(image_identity.at(lvl.image_id));
                values[group_label(*ident, gname)].push_back(lvl.normalized);
                max_value = std::max(max_value, lvl.normalized);
            }

            // Box-plot five-number summaries.
            std::string fives = "# seed=" + std::to_string(seed) + " config_digest=" + digest +
                                "\ngroup,count,min,q1,median,q3,max\n";
            for (auto& [group, vals] : values) {
                LevelStats st = five_number_summary(vals);
                fives += group + ',' + std::to_string(st.count) + ',' + fmt6(st.min) + ',' +
                         fmt6(st.q1) + ',' + fmt6(st.median) + ',' + fmt6(st.q3) + ',' +
                         fmt6(st.max) + '\n';
            }
            writer.write_text("fivenum_" + mname + "_" + gname + ".csv", fives);

            // Fixed-width histograms over [0, bins*0.05).
            const double bin_width = 0.05;
            const int bins = std::max(1, static_cast<int>(std::ceil(max_value / bin_width)));
            std::string hist = "# seed=" + std::to_string(seed) + " config_digest=" + digest +
                               "\ngroup,bin_lo,bin_hi,count\n";
            for (const auto& [group, vals] : values) {
                std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
                for (double v : vals) {
                    int b = std::min(bins - 1, static_cast<int>(v / bin_width));
                    ++counts[static_cast<std::size_t>(b)];
                }
                for (int b = 0; b < bins; ++b)
                    hist += group + ',' + fmt6(b * bin_width) + ',' + fmt6((b + 1) * bin_width) +
                            ',' + std::to_string(counts[static_cast<std::size_t>(b)]) + '\n';
            }
            writer.write_text("hist_" + mname + "_" + gname + ".csv", hist);
        }

        // Bias across classifiers for this method.
        std::vector<std::pair<std::string, json>> biases;
        for (const auto& mc : find_prediction_sets(dir)) {
            if (mc.method != mname) continue;
            const fs::path rpath = dir / ("report_" + mc.method + "_" + mc.tag + ".json");
            if (!fs::exists(rpath)) continue;
            json rep = read_json_file(rpath);
            if (rep.contains("bias")) biases.emplace_back(mc.tag, rep["bias"]);
        }
        if (!biases.empty()) {
            std::string csv = "# seed=" + std::to_string(seed) + " config_digest=" + digest +
                              "\nclassifier,balanced_accuracy,recall,precision,f1,pdr\n";
            for (const auto& [tag, b] : biases) {
                csv += tag + ',' + fmt6(b.value("balanced_accuracy", 0.0)) + ',' +
                       fmt6(b.value("recall", 0.0)) + ',' + fmt6(b.value("precision", 0.0)) +
                       ',' + fmt6(b.value("f1", 0.0)) + ',';
                if (b.contains("pdr")) csv += fmt6(b["pdr"].get<double>());
                csv += '\n';
            }
            writer.write_text("bias_summary_" + mname + ".csv", csv);
        }
    }
    if (written.empty()) throw Error("no calibration artifacts found in " + artifacts_dir);
    return written;
}

} // namespace obfair
