#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lotkit/model.hpp"

namespace lotkit::eval {

struct SplitSpec {
    double train_fraction = 0.6;
    bool stratified = true;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Disjoint, exhaustive split with per-class train counts of
// round(fraction * class_size), clamped so both sides keep every class.
Split stratified_split(std::span<const std::string> labels, const SplitSpec& spec);

// Stratified subsample used by the transfer experiments: `included` gets
// round(fraction * class_size) of each class, `remainder` the rest.
struct FractionSplit {
    std::vector<std::size_t> included;
    std::vector<std::size_t> remainder;
};
FractionSplit stratified_fraction(std::span<const std::string> labels, double fraction,
                                  std::uint64_t seed);

struct ConfusionMatrix {
    std::vector<std::string> classes;        // ordered
    std::vector<std::vector<long>> counts;   // [predicted][actual]

    static ConfusionMatrix from_labels(std::span<const std::string> predicted,
                                       std::span<const std::string> actual);
    long total() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvaluationReport {
    std::vector<std::string> classes;
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;   // unweighted class means
    double accuracy = 0.0;
    ConfusionMatrix cm;

    // Metadata filled by the experiment layer.
    std::string model_kind;
    std::uint64_t seed = 0;
    std::string split_desc;

    const ClassMetrics& for_class(const std::string& name) const;
    nlohmann::ordered_json to_json() const;
};

// Per-class precision/recall/F1 with the zero-denominator convention
// (0 when undefined), macro means, and accuracy = trace / total.
EvaluationReport compute_metrics(const ConfusionMatrix& cm);

struct CvResult {
    double param = 0.0;
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;  // sample standard deviation across folds
};

CvResult k_fold_cv(const model::Dataset& train, const model::FeatureMask& mask,
                   model::ModelKind kind, double param, const model::Hyperparams& hp, int k,
                   std::uint64_t seed);

// Argmax of mean accuracy; ties go to the smaller parameter value.
std::size_t select_best(std::span<const CvResult> results);

struct GridSearchResult {
    double best_param = 0.0;
    std::vector<CvResult> table;
};

GridSearchResult grid_search(const model::Dataset& train, const model::FeatureMask& mask,
                             model::ModelKind kind, std::span<const double> grid,
                             const model::Hyperparams& hp, int k, std::uint64_t seed);

}  // namespace lotkit::eval
