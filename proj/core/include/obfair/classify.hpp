#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obfair/errors.hpp"

namespace obfair {

using FeatureVector = std::vector<double>;

/// Labeled encodings. At least two distinct identities, consistent dims.
struct TrainingSet {
    std::vector<FeatureVector> vectors;
    std::vector<std::string> labels;

    int dim() const;
    void validate() const;
};

enum class ClassifierKind { knn, gnb, svc, mlp };
enum class KnnWeighting { uniform, distance };

std::string to_string(ClassifierKind k);
ClassifierKind classifier_kind_from_string(const std::string& s);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::knn;

    // knn
    int knn_k = 5;
    KnnWeighting knn_weighting = KnnWeighting::uniform;

    // gnb: smoothing epsilon = gnb_var_smoothing * max over features of the
    // global variance, added to every class-conditional variance.
    double gnb_var_smoothing = 1e-9;

    // svc: one-vs-rest linear scorers, subgradient descent on L2-regularized
    // hinge loss with lambda = 1/(C*n) and step schedule 1/(lambda*t).
    double svc_c = 1.0;
    int svc_epochs = 200;
    std::uint64_t svc_seed = 0;

    // mlp: one ReLU hidden layer, softmax output, cross-entropy loss,
    // mini-batch gradient descent with a constant step.
    int mlp_hidden = 100;
    double mlp_step = 1e-3;
    int mlp_epochs = 200;
    int mlp_batch = 32;
    std::uint64_t mlp_seed = 0;

    void validate() const;
    std::string to_json_string() const;
    static ClassifierSpec from_json_string(const std::string& text);

    /// Short human tag for artifact file names, e.g. "knn" or "mlp".
    std::string tag() const { return to_string(kind); }
};

/// Immutable trained classifier. Classes are kept sorted so "highest score,
/// lexicographically smaller id on ties" falls out of a strict argmax.
struct TrainedModel {
    ClassifierSpec spec;
    std::vector<std::string> classes;
    int dim = 0;

    // knn memorizes its training data
    std::vector<FeatureVector> knn_vectors;
    std::vector<int> knn_labels;

    // gnb
    std::vector<std::vector<double>> gnb_mean;  // [class][feature]
    std::vector<std::vector<double>> gnb_var;   // smoothed
    std::vector<double> gnb_log_prior;

    // svc (one-vs-rest)
    std::vector<std::vector<double>> svc_weight; // [class][feature]
    std::vector<double> svc_bias;

    // mlp, flattened [W1 | b1 | W2 | b2]
    std::vector<double> mlp_params;

    std::string to_json_string() const;
    static TrainedModel from_json_string(const std::string& text);
};

TrainedModel train(const ClassifierSpec& spec, const TrainingSet& data);

/// One label per query, deterministic, never outside the model's class list.
std::vector<std::string> predict(const TrainedModel& model,
                                 const std::vector<FeatureVector>& queries);

/// Per-class scores for one query (knn: votes; gnb: log joint; svc: margins;
/// mlp: logits). Exposed for tests and diagnostics.
std::vector<double> decision_scores(const TrainedModel& model, const FeatureVector& query);

/// Stratified k-fold cross-validation over the declared grid; returns the
/// spec with the highest mean validation accuracy, first declared on ties.
ClassifierSpec grid_search(ClassifierKind kind, const std::vector<ClassifierSpec>& grid,
                           const TrainingSet& data, int folds = 3);

/// Built-in grids: knn k in {1,3,5,7,9} x weighting {uniform,distance};
/// mlp width in {64,128} x step {1e-3,1e-2}; gnb/svc stay at defaults.
std::vector<ClassifierSpec> default_grid(ClassifierKind kind);

namespace mlp {

struct Shape {
    int dim = 0;
    int hidden = 0;
    int classes = 0;

    int param_count() const { return hidden * dim + hidden + classes * hidden + classes; }
};

/// Mean cross-entropy over the batch at the given flat parameters
/// [W1|b1|W2|b2]; fills the analytic gradient when grad is non-null.
/// Shared by the trainer and the finite-difference checks.
double loss_and_grad(const Shape& shape, const std::vector<double>& params,
                     const std::vector<FeatureVector>& x, const std::vector<int>& y,
                     std::vector<double>* grad);

} // namespace mlp

} // namespace obfair
