#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lotkit/data.hpp"

namespace lotkit::model {

// Which determinants a model sees: any subset of the seven numeric features
// plus the zone category (one-hot for vector models, native for NB).
struct FeatureMask {
    std::array<bool, 7> numeric{true, true, true, true, true, true, true};
    bool zone = true;

    static FeatureMask all() { return FeatureMask{}; }
    static FeatureMask none() {
        return FeatureMask{{false, false, false, false, false, false, false}, false};
    }

    int numeric_count() const {
        int n = 0;
        for (bool b : numeric) n += b;
        return n;
    }
    int input_dim() const { return numeric_count() + (zone ? kZoneCategoryCount : 0); }
};

struct Row {
    std::array<double, 7> numerics{};
    ZoneCategory zone = ZoneCategory::Residential;

    static Row from(const FeatureVector& f) { return Row{f.numerics(), f.zone}; }
};

struct Dataset {
    std::vector<Row> rows;
    std::vector<std::string> labels;  // parallel to rows

    std::size_t size() const { return rows.size(); }
};

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

// Index of the maximum; ties resolve to the smallest index. The shared
// tie-breaking rule for votes, posteriors and margins (labels are kept
// sorted, so smallest index means lexicographically smallest label).
std::size_t argmax_tie_smallest(std::span<const double> values);

// Per-feature standardization (training mean/std) plus a fixed-order one-hot
// zone block. Constant columns transform to 0.
class Preprocessor {
public:
    Preprocessor() = default;
    static Preprocessor fit(std::span<const Row> rows, const FeatureMask& mask);

    const FeatureMask& mask() const { return mask_; }
    int output_dim() const { return mask_.input_dim(); }
    void transform(const Row& row, double* out) const;
    std::vector<double> transform(const Row& row) const;
    std::vector<std::vector<double>> transform_all(std::span<const Row> rows) const;

    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& stds() const { return std_; }
    static Preprocessor restore(const FeatureMask& mask, std::vector<double> means,
                                std::vector<double> stds);

private:
    FeatureMask mask_;
    std::vector<double> mean_, std_;  // one entry per enabled numeric feature
};

enum class ModelKind { RandomForest, Knn, NaiveBayes, Mlp, Svm };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct RfParams {
    std::vector<int> tree_grid{2, 8, 14};
};
struct KnnParams {
    std::vector<int> k_grid{1, 3, 5, 7};
};
struct MlpParams {
    std::vector<int> hidden_grid{3, 5, 8, 10};
    double learning_rate = 0.01;
    int epochs = 500;
};
struct NbParams {
    double laplace_alpha = 1.0;
    double variance_floor = 1e-9;
};
struct SvmParams {
    std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2};
    int epochs = 100;
};

struct Hyperparams {
    RfParams rf;
    KnnParams knn;
    MlpParams mlp;
    NbParams nb;
    SvmParams svm;
};

// --- classifier cores ------------------------------------------------------

struct TreeNode {
    int feature = -1;        // split dimension; -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1, right = -1;
    int label = -1;          // leaf label index
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    int predict(const double* x) const;
};

struct Forest {
    std::vector<DecisionTree> trees;
};

struct KnnStore {
    int k = 1;
    int dim = 0;
    std::vector<double> matrix;  // row-major, size() == labels.size() * dim
    std::vector<int> labels;
};

struct NbStats {
    double laplace_alpha = 1.0;
    double variance_floor = 1e-9;
    std::vector<long> class_counts;
    std::vector<std::vector<double>> means;  // [class][enabled numeric]
    std::vector<std::vector<double>> vars;
    std::vector<std::array<long, kZoneCategoryCount>> zone_counts;  // when mask.zone
};

struct MlpNet {
    int input_dim = 0, hidden_size = 0, n_classes = 0;
    // Flat layout: w1 (hidden x input), b1, w2 (classes x hidden), b2.
    std::vector<double> params;

    std::size_t param_count() const {
        return static_cast<std::size_t>(hidden_size) * input_dim + hidden_size +
               static_cast<std::size_t>(n_classes) * hidden_size + n_classes;
    }
    std::vector<double> probabilities(const double* x) const;
    double sample_loss(const double* x, int label) const;
    // Adds d(sample_loss)/d(params) into grad (same flat layout).
    void add_sample_gradient(const double* x, int label, std::vector<double>& grad) const;
};

struct SvmProblem {
    std::vector<double> weights;
    double bias = 0.0;
};

struct SvmOvr {
    double lambda = 1e-3;
    std::vector<SvmProblem> problems;  // one-vs-rest, per label index
};

// --- the common fit/predict contract ---------------------------------------

struct TrainedModel {
    ModelKind kind = ModelKind::RandomForest;
    FeatureMask mask;
    Preprocessor prep;
    std::vector<std::string> labels;  // sorted lexicographically
    std::variant<Forest, KnnStore, NbStats, MlpNet, SvmOvr> core;

    std::string predict_one(const Row& row) const;
    std::vector<std::string> predict(std::span<const Row> rows) const;

    // NB only: normalized class posteriors for one row, ordered by labels.
    std::vector<double> nb_posterior(const Row& row) const;
};

TrainedModel fit_random_forest(const Dataset& train, const FeatureMask& mask, int n_trees,
                               std::uint64_t seed);
TrainedModel fit_knn(const Dataset& train, const FeatureMask& mask, int k);
TrainedModel fit_naive_bayes(const Dataset& train, const FeatureMask& mask,
                             const NbParams& params = {});
TrainedModel fit_mlp(const Dataset& train, const FeatureMask& mask, int hidden_size,
                     const MlpParams& params, std::uint64_t seed);
TrainedModel fit_svm(const Dataset& train, const FeatureMask& mask, double lambda,
                     const SvmParams& params, std::uint64_t seed);

// Uniform dispatch for cross-validation and grid search; param carries the
// tuned dimension of the given kind (trees, k, hidden size, lambda, alpha).
TrainedModel fit(ModelKind kind, const Dataset& train, const FeatureMask& mask, double param,
                 const Hyperparams& hp, std::uint64_t seed);
std::vector<double> grid_values(ModelKind kind, const Hyperparams& hp);

// Versioned JSON container; save -> load -> predict is bit-identical to the
// in-memory model.
void save(const TrainedModel& model, const std::string& path);
TrainedModel load(const std::string& path);

}  // namespace lotkit::model
