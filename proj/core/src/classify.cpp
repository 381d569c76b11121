#include "obfair/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "obfair/rng.hpp"

namespace obfair {

using nlohmann::json;

int TrainingSet::dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors[0].size()); }

void TrainingSet::validate() const {
    if (vectors.empty()) throw Error("training set is empty");
    if (vectors.size() != labels.size())
        throw Error("training set has mismatched vectors/labels");
    const std::size_t d = vectors[0].size();
    if (d == 0) throw Error("training vectors must be non-empty");
    for (const auto& v : vectors)
        if (v.size() != d) throw Error("training vectors have inconsistent dimensions");
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw Error("training set needs at least 2 distinct identities");
}

std::string to_string(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::knn: return "knn";
        case ClassifierKind::gnb: return "gnb";
        case ClassifierKind::svc: return "svc";
        case ClassifierKind::mlp: return "mlp";
    }
    return "knn";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "knn") return ClassifierKind::knn;
    if (s == "gnb") return ClassifierKind::gnb;
    if (s == "svc") return ClassifierKind::svc;
    if (s == "mlp") return ClassifierKind::mlp;
    throw ConfigError("unknown classifier kind: " + s);
}

void ClassifierSpec::validate() const {
    if (knn_k < 1) throw ConfigError("knn k must be >= 1");
    if (gnb_var_smoothing < 0.0) throw ConfigError("gnb var smoothing must be >= 0");
    if (!(svc_c > 0.0)) throw ConfigError("svc C must be > 0");
    if (svc_epochs < 1) throw ConfigError("svc epochs must be >= 1");
    if (mlp_hidden < 1) throw ConfigError("mlp hidden width must be >= 1");
    if (!(mlp_step > 0.0)) throw ConfigError("mlp step size must be > 0");
    if (mlp_epochs < 1) throw ConfigError("mlp epochs must be >= 1");
    if (mlp_batch < 1) throw ConfigError("mlp batch size must be >= 1");
}

namespace {

json spec_to_json(const ClassifierSpec& s) {
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case ClassifierKind::knn:
            j["k"] = s.knn_k;
            j["weighting"] = s.knn_weighting == KnnWeighting::uniform ? "uniform" : "distance";
            break;
        case ClassifierKind::gnb:
            j["var_smoothing"] = s.gnb_var_smoothing;
            break;
        case ClassifierKind::svc:
            j["C"] = s.svc_c;
            j["epochs"] = s.svc_epochs;
            j["seed"] = s.svc_seed;
            j["step_schedule"] = "inverse_lambda_t";
            break;
        case ClassifierKind::mlp:
            j["hidden"] = s.mlp_hidden;
            j["step"] = s.mlp_step;
            j["epochs"] = s.mlp_epochs;
            j["batch"] = s.mlp_batch;
            j["seed"] = s.mlp_seed;
            break;
    }
    return j;
}

ClassifierSpec spec_from_json(const json& j) {
    ClassifierSpec s;
    s.kind = classifier_kind_from_string(j.at("kind").get<std::string>());
    switch (s.kind) {
        case ClassifierKind::knn:
            s.knn_k = j.value("k", s.knn_k);
            if (j.contains("weighting")) {
                std::string w = j["weighting"].get<std::string>();
                if (w == "uniform") s.knn_weighting = KnnWeighting::uniform;
                else if (w == "distance") s.knn_weighting = KnnWeighting::distance;
                else throw ConfigError("unknown knn weighting: " + w);
            }
            break;
        case ClassifierKind::gnb:
            s.gnb_var_smoothing = j.value("var_smoothing", s.gnb_var_smoothing);
            break;
        case ClassifierKind::svc:
            s.svc_c = j.value("C", s.svc_c);
            s.svc_epochs = j.value("epochs", s.svc_epochs);
            s.svc_seed = j.value("seed", s.svc_seed);
            break;
        case ClassifierKind::mlp:
            s.mlp_hidden = j.value("hidden", s.mlp_hidden);
            s.mlp_step = j.value("step", s.mlp_step);
            s.mlp_epochs = j.value("epochs", s.mlp_epochs);
            s.mlp_batch = j.value("batch", s.mlp_batch);
            s.mlp_seed = j.value("seed", s.mlp_seed);
            break;
    }
    s.validate();
    return s;
}

std::vector<std::string> sorted_classes(const std::vector<std::string>& labels) {
    std::set<std::string> s(labels.begin(), labels.end());
    return {s.begin(), s.end()};
}

std::vector<int> label_indices(const std::vector<std::string>& labels,
                               const std::vector<std::string>& classes) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < classes.size(); ++i)
        index[classes[i]] = static_cast<int>(i);
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index.at(l));
    return out;
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void train_gnb(TrainedModel& m, const TrainingSet& data, const std::vector<int>& y) {
    const int n_classes = static_cast<int>(m.classes.size());
    const int d = m.dim;
    const std::size_t n = data.vectors.size();

    std::vector<double> global_mean(d, 0.0), global_var(d, 0.0);
    for (const auto& v : data.vectors)
        for (int j = 0; j < d; ++j) global_mean[j] += v[j];
    for (int j = 0; j < d; ++j) global_mean[j] /= static_cast<double>(n);
    for (const auto& v : data.vectors)
        for (int j = 0; j < d; ++j) {
            double diff = v[j] - global_mean[j];
            global_var[j] += diff * diff;
        }
    double max_var = 0.0;
    for (int j = 0; j < d; ++j)
        max_var = std::max(max_var, global_var[j] / static_cast<double>(n));
    const double eps = m.spec.gnb_var_smoothing * max_var;

    m.gnb_mean.assign(n_classes, std::vector<double>(d, 0.0));
    m.gnb_var.assign(n_classes, std::vector<double>(d, 0.0));
    m.gnb_log_prior.assign(n_classes, 0.0);
    std::vector<double> counts(n_classes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        counts[y[i]] += 1.0;
        for (int j = 0; j < d; ++j) m.gnb_mean[y[i]][j] += data.vectors[i][j];
    }
    for (int c = 0; c < n_classes; ++c)
        for (int j = 0; j < d; ++j) m.gnb_mean[c][j] /= counts[c];
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            double diff = data.vectors[i][j] - m.gnb_mean[y[i]][j];
            m.gnb_var[y[i]][j] += diff * diff;
        }
    for (int c = 0; c < n_classes; ++c) {
        for (int j = 0; j < d; ++j) m.gnb_var[c][j] = m.gnb_var[c][j] / counts[c] + eps;
        m.gnb_log_prior[c] = std::log(counts[c] / static_cast<double>(n));
    }
}

void train_svc(TrainedModel& m, const TrainingSet& data, const std::vector<int>& y) {
    const int n_classes = static_cast<int>(m.classes.size());
    const int d = m.dim;
    const std::size_t n = data.vectors.size();
    const double lambda = 1.0 / (m.spec.svc_c * static_cast<double>(n));

    // One shuffled visit order per epoch, shared by all one-vs-rest problems.
    std::vector<std::vector<std::size_t>> orders(static_cast<std::size_t>(m.spec.svc_epochs));
    for (int e = 0; e < m.spec.svc_epochs; ++e) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng(mix64(m.spec.svc_seed, 0x5c0ULL + static_cast<std::uint64_t>(e)));
        deterministic_shuffle(order, rng);
        orders[static_cast<std::size_t>(e)] = std::move(order);
    }

    m.svc_weight.assign(n_classes, std::vector<double>(d, 0.0));
    m.svc_bias.assign(n_classes, 0.0);
    for (int c = 0; c < n_classes; ++c) {
        std::vector<double>& w = m.svc_weight[c];
        double& b = m.svc_bias[c];
        long long t = 0;
        for (int e = 0; e < m.spec.svc_epochs; ++e) {
            for (std::size_t idx : orders[static_cast<std::size_t>(e)]) {
                ++t;
                const double eta = 1.0 / (lambda * static_cast<double>(t));
                const double target = y[idx] == c ? 1.0 : -1.0;
                const FeatureVector& x = data.vectors[idx];
                double margin = b;
                for (int j = 0; j < d; ++j) margin += w[j] * x[j];
                margin *= target;
                const double shrink = 1.0 - eta * lambda;
                if (margin < 1.0) {
                    for (int j = 0; j < d; ++j) w[j] = shrink * w[j] + eta * target * x[j];
                    b += eta * target;
                } else {
                    for (int j = 0; j < d; ++j) w[j] *= shrink;
                }
            }
        }
    }
}

void init_mlp(TrainedModel& m) {
    const mlp::Shape shape{m.dim, m.spec.mlp_hidden, static_cast<int>(m.classes.size())};
    m.mlp_params.assign(static_cast<std::size_t>(shape.param_count()), 0.0);
    NormalStream init(mix64(m.spec.mlp_seed, fnv1a64("mlp-init")));
    const double s1 = std::sqrt(2.0 / shape.dim);
    const double s2 = std::sqrt(2.0 / shape.hidden);
    std::size_t p = 0;
    for (int i = 0; i < shape.hidden * shape.dim; ++i) m.mlp_params[p++] = s1 * init.next();
    p += static_cast<std::size_t>(shape.hidden); // b1 stays zero
    for (int i = 0; i < shape.classes * shape.hidden; ++i) m.mlp_params[p++] = s2 * init.next();
}

void train_mlp(TrainedModel& m, const TrainingSet& data, const std::vector<int>& y) {
    const mlp::Shape shape{m.dim, m.spec.mlp_hidden, static_cast<int>(m.classes.size())};
    init_mlp(m);
    const std::size_t n = data.vectors.size();
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(m.spec.mlp_batch), n);

    std::vector<std::size_t> order(n);
    std::vector<double> grad;
    std::vector<FeatureVector> bx;
    std::vector<int> by;
    for (int e = 0; e < m.spec.mlp_epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng(mix64(m.spec.mlp_seed, 0x313370 + static_cast<std::uint64_t>(e)));
        deterministic_shuffle(order, rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            bx.clear();
            by.clear();
            for (std::size_t i = start; i < end; ++i) {
                bx.push_back(data.vectors[order[i]]);
                by.push_back(y[order[i]]);
            }
            mlp::loss_and_grad(shape, m.mlp_params, bx, by, &grad);
            for (std::size_t p = 0; p < m.mlp_params.size(); ++p)
                m.mlp_params[p] -= m.spec.mlp_step * grad[p];
        }
    }
}

} // namespace

namespace mlp {

double loss_and_grad(const Shape& shape, const std::vector<double>& params,
                     const std::vector<FeatureVector>& x, const std::vector<int>& y,
                     std::vector<double>* grad) {
    const int D = shape.dim, H = shape.hidden, C = shape.classes;
    if (params.size() != static_cast<std::size_t>(shape.param_count()))
        throw Error("mlp parameter vector has wrong length");
    const double* w1 = params.data();             // H x D
    const double* b1 = w1 + H * D;                // H
    const double* w2 = b1 + H;                    // C x H
    const double* b2 = w2 + C * H;                // C

    double* g1 = nullptr;
    double* gb1 = nullptr;
    double* g2 = nullptr;
    double* gb2 = nullptr;
    if (grad) {
        grad->assign(params.size(), 0.0);
        g1 = grad->data();
        gb1 = g1 + H * D;
        g2 = gb1 + H;
        gb2 = g2 + C * H;
    }

    const std::size_t n = x.size();
    std::vector<double> hidden(H), logits(C), probs(C), dlogits(C), dhidden(H);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const FeatureVector& xi = x[i];
        for (int h = 0; h < H; ++h) {
            double z = b1[h];
            const double* row = w1 + h * D;
            for (int j = 0; j < D; ++j) z += row[j] * xi[j];
            hidden[h] = z > 0.0 ? z : 0.0;
        }
        double max_logit = -1e300;
        for (int c = 0; c < C; ++c) {
            double z = b2[c];
            const double* row = w2 + c * H;
            for (int h = 0; h < H; ++h) z += row[h] * hidden[h];
            logits[c] = z;
            max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        for (int c = 0; c < C; ++c) {
            probs[c] = std::exp(logits[c] - max_logit);
            denom += probs[c];
        }
        for (int c = 0; c < C; ++c) probs[c] /= denom;
        loss += -std::log(std::max(probs[y[i]], 1e-300));

        if (!grad) continue;
        for (int c = 0; c < C; ++c) dlogits[c] = probs[c] - (c == y[i] ? 1.0 : 0.0);
        for (int c = 0; c < C; ++c) {
            gb2[c] += dlogits[c];
            double* row = g2 + c * H;
            for (int h = 0; h < H; ++h) row[h] += dlogits[c] * hidden[h];
        }
        for (int h = 0; h < H; ++h) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c) acc += dlogits[c] * w2[c * H + h];
            dhidden[h] = hidden[h] > 0.0 ? acc : 0.0;
        }
        for (int h = 0; h < H; ++h) {
            gb1[h] += dhidden[h];
            double* row = g1 + h * D;
            for (int j = 0; j < D; ++j) row[j] += dhidden[h] * xi[j];
        }
    }
    const double scale = 1.0 / static_cast<double>(n);
    if (grad)
        for (double& g : *grad) g *= scale;
    return loss * scale;
}

} // namespace mlp

TrainedModel train(const ClassifierSpec& spec, const TrainingSet& data) {
    spec.validate();
    data.validate();
    TrainedModel m;
    m.spec = spec;
    m.classes = sorted_classes(data.labels);
    m.dim = data.dim();
    const std::vector<int> y = label_indices(data.labels, m.classes);

    switch (spec.kind) {
        case ClassifierKind::knn:
            m.knn_vectors = data.vectors;
            m.knn_labels = y;
            break;
        case ClassifierKind::gnb:
            train_gnb(m, data, y);
            break;
        case ClassifierKind::svc:
            train_svc(m, data, y);
            break;
        case ClassifierKind::mlp:
            train_mlp(m, data, y);
            break;
    }
    return m;
}

namespace {

std::vector<double> knn_scores(const TrainedModel& m, const FeatureVector& q,
                               std::vector<double>* tie_distance) {
    const std::size_t n = m.knn_vectors.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.spec.knn_k), n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(q, m.knn_vectors[i]);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return a < b;
                      });

    std::vector<double> votes(m.classes.size(), 0.0);
    std::vector<double> summed(m.classes.size(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t t = idx[i];
        const double d = std::sqrt(dist[t]);
        const int cls = m.knn_labels[t];
        summed[static_cast<std::size_t>(cls)] += d;
        if (m.spec.knn_weighting == KnnWeighting::uniform)
            votes[static_cast<std::size_t>(cls)] += 1.0;
        else
            votes[static_cast<std::size_t>(cls)] += 1.0 / std::max(d, 1e-12);
    }
    if (tie_distance) *tie_distance = std::move(summed);
    return votes;
}

int argmax_label(const std::vector<double>& scores) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(scores.size()); ++c)
        if (scores[static_cast<std::size_t>(c)] > scores[static_cast<std::size_t>(best)])
            best = c;
    return best;
}

int knn_predict_index(const TrainedModel& m, const FeatureVector& q) {
    std::vector<double> summed;
    std::vector<double> votes = knn_scores(m, q, &summed);
    // Highest vote wins; vote ties prefer the smaller summed neighbor
    // distance, then the lexicographically smaller id (= smaller index).
    int best = 0;
    for (int c = 1; c < static_cast<int>(votes.size()); ++c) {
        const std::size_t cc = static_cast<std::size_t>(c);
        const std::size_t bb = static_cast<std::size_t>(best);
        if (votes[cc] > votes[bb] ||
            (votes[cc] == votes[bb] && votes[cc] > 0.0 && summed[cc] < summed[bb]))
            best = c;
    }
    return best;
}

std::vector<double> gnb_scores(const TrainedModel& m, const FeatureVector& q) {
    std::vector<double> scores(m.classes.size());
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
        double s = m.gnb_log_prior[c];
        for (int j = 0; j < m.dim; ++j) {
            const double var = m.gnb_var[c][static_cast<std::size_t>(j)];
            const double diff = q[static_cast<std::size_t>(j)] - m.gnb_mean[c][static_cast<std::size_t>(j)];
            s += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
        }
        scores[c] = s;
    }
    return scores;
}

std::vector<double> svc_scores(const TrainedModel& m, const FeatureVector& q) {
    std::vector<double> scores(m.classes.size());
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
        double s = m.svc_bias[c];
        for (int j = 0; j < m.dim; ++j)
            s += m.svc_weight[c][static_cast<std::size_t>(j)] * q[static_cast<std::size_t>(j)];
        scores[c] = s;
    }
    return scores;
}

std::vector<double> mlp_scores(const TrainedModel& m, const FeatureVector& q) {
    const mlp::Shape shape{m.dim, m.spec.mlp_hidden, static_cast<int>(m.classes.size())};
    const double* w1 = m.mlp_params.data();
    const double* b1 = w1 + shape.hidden * shape.dim;
    const double* w2 = b1 + shape.hidden;
    const double* b2 = w2 + shape.classes * shape.hidden;
    std::vector<double> hidden(static_cast<std::size_t>(shape.hidden));
    for (int h = 0; h < shape.hidden; ++h) {
        double z = b1[h];
        const double* row = w1 + h * shape.dim;
        for (int j = 0; j < shape.dim; ++j) z += row[j] * q[static_cast<std::size_t>(j)];
        hidden[static_cast<std::size_t>(h)] = z > 0.0 ? z : 0.0;
    }
    std::vector<double> logits(static_cast<std::size_t>(shape.classes));
    for (int c = 0; c < shape.classes; ++c) {
        double z = b2[c];
        const double* row = w2 + c * shape.hidden;
        for (int h = 0; h < shape.hidden; ++h) z += row[h] * hidden[static_cast<std::size_t>(h)];
        logits[static_cast<std::size_t>(c)] = z;
    }
    return logits;
}

} // namespace

std::vector<double> decision_scores(const TrainedModel& model, const FeatureVector& query) {
    if (static_cast<int>(query.size()) != model.dim)
        throw Error("query dimension does not match the model");
    switch (model.spec.kind) {
        case ClassifierKind::knn: return knn_scores(model, query, nullptr);
        case ClassifierKind::gnb: return gnb_scores(model, query);
        case ClassifierKind::svc: return svc_scores(model, query);
        case ClassifierKind::mlp: return mlp_scores(model, query);
    }
    throw Error("unreachable");
}

std::vector<std::string> predict(const TrainedModel& model,
                                 const std::vector<FeatureVector>& queries) {
    std::vector<std::string> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
        if (static_cast<int>(q.size()) != model.dim)
            throw Error("query dimension does not match the model");
        int best;
        if (model.spec.kind == ClassifierKind::knn)
            best = knn_predict_index(model, q);
        else
            best = argmax_label(decision_scores(model, q));
        out.push_back(model.classes[static_cast<std::size_t>(best)]);
    }
    return out;
}

std::vector<ClassifierSpec> default_grid(ClassifierKind kind) {
    std::vector<ClassifierSpec> grid;
    switch (kind) {
        case ClassifierKind::knn:
            for (int k : {1, 3, 5, 7, 9})
                for (KnnWeighting w : {KnnWeighting::uniform, KnnWeighting::distance}) {
                    ClassifierSpec s;
                    s.kind = ClassifierKind::knn;
                    s.knn_k = k;
                    s.knn_weighting = w;
                    grid.push_back(s);
                }
            break;
        case ClassifierKind::mlp:
            for (int width : {64, 128})
                for (double step : {1e-3, 1e-2}) {
                    ClassifierSpec s;
                    s.kind = ClassifierKind::mlp;
                    s.mlp_hidden = width;
                    s.mlp_step = step;
                    grid.push_back(s);
                }
            break;
        case ClassifierKind::gnb: {
            ClassifierSpec s;
            s.kind = ClassifierKind::gnb;
            grid.push_back(s);
            break;
        }
        case ClassifierKind::svc: {
            ClassifierSpec s;
            s.kind = ClassifierKind::svc;
            grid.push_back(s);
            break;
        }
    }
    return grid;
}

ClassifierSpec grid_search(ClassifierKind kind, const std::vector<ClassifierSpec>& grid,
                           const TrainingSet& data, int folds) {
    if (grid.empty()) throw ConfigError("grid search needs at least one grid point");
    if (folds < 2) throw ConfigError("grid search needs at least 2 folds");
    data.validate();
    for (const auto& s : grid)
        if (s.kind != kind) throw ConfigError("grid point kind does not match grid_search kind");

    // Stratified fold assignment: the j-th sample of each class lands in
    // fold j % folds, so small classes pool into fewer folds.
    const std::vector<std::string> classes = sorted_classes(data.labels);
    std::map<std::string, int> seen;
    std::vector<int> fold_of(data.vectors.size());
    for (std::size_t i = 0; i < data.vectors.size(); ++i)
        fold_of[i] = seen[data.labels[i]]++ % folds;

    double best_acc = -1.0;
    std::size_t best_index = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double total_correct = 0.0;
        double total_count = 0.0;
        for (int f = 0; f < folds; ++f) {
            TrainingSet fold_train;
            std::vector<FeatureVector> val_x;
            std::vector<std::string> val_y;
            for (std::size_t i = 0; i < data.vectors.size(); ++i) {
                if (fold_of[i] == f) {
                    val_x.push_back(data.vectors[i]);
                    val_y.push_back(data.labels[i]);
                } else {
                    fold_train.vectors.push_back(data.vectors[i]);
                    fold_train.labels.push_back(data.labels[i]);
                }
            }
            if (val_x.empty()) continue;
            TrainedModel model = train(grid[g], fold_train);
            std::vector<std::string> pred = predict(model, val_x);
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (pred[i] == val_y[i]) total_correct += 1.0;
            total_count += static_cast<double>(val_x.size());
        }
        const double acc = total_count > 0.0 ? total_correct / total_count : 0.0;
        if (acc > best_acc) {
            best_acc = acc;
            best_index = g;
        }
    }
    return grid[best_index];
}

std::string ClassifierSpec::to_json_string() const { return spec_to_json(*this).dump(); }

ClassifierSpec ClassifierSpec::from_json_string(const std::string& text) {
    return spec_from_json(json::parse(text));
}

std::string TrainedModel::to_json_string() const {
    json j{{"version", 1},
           {"kind", to_string(spec.kind)},
           {"hyperparameters", spec_to_json(spec)},
           {"dim", dim},
           {"classes", classes}};
    json params = json::object();
    switch (spec.kind) {
        case ClassifierKind::knn: {
            json vecs = json::array();
            for (const auto& v : knn_vectors) vecs.push_back(v);
            params["vectors"] = std::move(vecs);
            params["labels"] = knn_labels;
            break;
        }
        case ClassifierKind::gnb:
            params["mean"] = gnb_mean;
            params["var"] = gnb_var;
            params["log_prior"] = gnb_log_prior;
            break;
        case ClassifierKind::svc:
            params["weight"] = svc_weight;
            params["bias"] = svc_bias;
            break;
        case ClassifierKind::mlp:
            params["flat"] = mlp_params;
            break;
    }
    j["params"] = std::move(params);
    return j.dump();
}

TrainedModel TrainedModel::from_json_string(const std::string& text) {
    json j = json::parse(text);
    if (j.value("version", 0) != 1) throw Error("unsupported model version");
    TrainedModel m;
    m.spec = spec_from_json(j.at("hyperparameters"));
    m.dim = j.at("dim").get<int>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    const json& params = j.at("params");
    switch (m.spec.kind) {
        case ClassifierKind::knn:
            m.knn_vectors = params.at("vectors").get<std::vector<FeatureVector>>();
            m.knn_labels = params.at("labels").get<std::vector<int>>();
            break;
        case ClassifierKind::gnb:
            m.gnb_mean = params.at("mean").get<std::vector<std::vector<double>>>();
            m.gnb_var = params.at("var").get<std::vector<std::vector<double>>>();
            m.gnb_log_prior = params.at("log_prior").get<std::vector<double>>();
            break;
        case ClassifierKind::svc:
            m.svc_weight = params.at("weight").get<std::vector<std::vector<double>>>();
            m.svc_bias = params.at("bias").get<std::vector<double>>();
            break;
        case ClassifierKind::mlp:
            m.mlp_params = params.at("flat").get<std::vector<double>>();
            break;
    }
    return m;
}

} // namespace obfair
