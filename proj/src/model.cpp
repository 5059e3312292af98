#include "lotkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "lotkit/errors.hpp"
#include "lotkit/rng.hpp"

namespace lotkit::model {

namespace {

struct Encoded {
    std::vector<std::string> labels;       // sorted unique
    std::vector<int> y;                    // per row
    std::vector<std::vector<double>> x;    // transformed rows
};

Encoded encode(const Dataset& train, const Preprocessor& prep) {
    if (train.rows.empty()) throw DegenerateTraining("empty training set");
    if (train.rows.size() != train.labels.size()) {
        throw SchemaMismatch("row/label count mismatch");
    }
    Encoded e;
    e.labels = train.labels;
    std::sort(e.labels.begin(), e.labels.end());
    e.labels.erase(std::unique(e.labels.begin(), e.labels.end()), e.labels.end());
    e.y.reserve(train.size());
    for (const auto& l : train.labels) {
        e.y.push_back(static_cast<int>(
            std::lower_bound(e.labels.begin(), e.labels.end(), l) - e.labels.begin()));
    }
    e.x = prep.transform_all(train.rows);
    return e;
}

void require_two_classes(const Encoded& e, const char* kind) {
    if (e.labels.size() < 2) {
        throw DegenerateTraining(std::string(kind) + ": training set has a single class");
    }
}

int majority_label(const std::vector<long>& counts) {
    long best = -1;
    int idx = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > best) {
            best = counts[c];
            idx = static_cast<int>(c);
        }
    }
    return idx;
}

}  // namespace

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        out.rows.push_back(ds.rows[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

std::size_t argmax_tie_smallest(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

// --- preprocessor -----------------------------------------------------------

Preprocessor Preprocessor::fit(std::span<const Row> rows, const FeatureMask& mask) {
    if (mask.input_dim() == 0) throw ConfigError("feature mask selects no features");
    if (rows.empty()) throw DegenerateTraining("cannot fit preprocessor on no rows");
    Preprocessor p;
    p.mask_ = mask;
    const double n = static_cast<double>(rows.size());
    for (int f = 0; f < 7; ++f) {
        if (!mask.numeric[f]) continue;
        double sum = 0.0;
        for (const auto& r : rows) sum += r.numerics[f];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : rows) {
            const double d = r.numerics[f] - mean;
            ss += d * d;
        }
        p.mean_.push_back(mean);
        p.std_.push_back(std::sqrt(ss / n));
    }
    return p;
}

Preprocessor Preprocessor::restore(const FeatureMask& mask, std::vector<double> means,
                                   std::vector<double> stds) {
    Preprocessor p;
    p.mask_ = mask;
    p.mean_ = std::move(means);
    p.std_ = std::move(stds);
    return p;
}

void Preprocessor::transform(const Row& row, double* out) const {
    int o = 0;
    int stat = 0;
    for (int f = 0; f < 7; ++f) {
        if (!mask_.numeric[f]) continue;
        const double sd = std_[stat];
        out[o++] = sd > 0.0 ? (row.numerics[f] - mean_[stat]) / sd : 0.0;
        ++stat;
    }
    if (mask_.zone) {
        for (int z = 0; z < kZoneCategoryCount; ++z) {
            out[o++] = static_cast<int>(row.zone) == z ? 1.0 : 0.0;
        }
    }
}

std::vector<double> Preprocessor::transform(const Row& row) const {
    std::vector<double> out(output_dim());
    transform(row, out.data());
    return out;
}

std::vector<std::vector<double>> Preprocessor::transform_all(std::span<const Row> rows) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(transform(r));
    return out;
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::RandomForest: return "rf";
        case ModelKind::Knn: return "knn";
        case ModelKind::NaiveBayes: return "nb";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Svm: return "svm";
    }
    return "";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "rf") return ModelKind::RandomForest;
    if (s == "knn") return ModelKind::Knn;
    if (s == "nb") return ModelKind::NaiveBayes;
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "svm") return ModelKind::Svm;
    throw ConfigError("unknown classifier '" + s + "' (expected rf|knn|nb|mlp|svm)");
}

// --- decision trees ---------------------------------------------------------

int DecisionTree::predict(const double* x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const TreeNode& n = nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[node].label;
}

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = std::numeric_limits<double>::infinity();
};

double gini_from_counts(const std::vector<long>& counts, long total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                int n_classes, int dim, int mtry, Rng& rng)
        : x_(x), y_(y), n_classes_(n_classes), dim_(dim), mtry_(mtry), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> indices) {
        tree_.nodes.clear();
        grow(std::move(indices));
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t> indices) {
        std::vector<long> counts(n_classes_, 0);
        for (std::size_t i : indices) ++counts[y_[i]];
        const long total = static_cast<long>(indices.size());
        const double node_gini = gini_from_counts(counts, total);

        const int node = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        const bool pure = std::count(counts.begin(), counts.end(), 0L) >=
                          static_cast<long>(counts.size()) - 1;
        SplitChoice split;
        if (!pure && indices.size() >= 2) {
            split = best_split(indices, node_gini, sample_features());
            if (split.feature < 0 && mtry_ < dim_) {
                // The sampled features were all constant or useless here;
                // retrying over every feature keeps distinct rows separable.
                split = best_split(indices, node_gini, all_features());
            }
        }
        if (split.feature < 0) {
            tree_.nodes[node].label = majority_label(counts);
            return node;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : indices) {
            (x_[i][split.feature] <= split.threshold ? left : right).push_back(i);
        }
        indices.clear();
        indices.shrink_to_fit();

        const int li = grow(std::move(left));
        const int ri = grow(std::move(right));
        tree_.nodes[node].feature = split.feature;
        tree_.nodes[node].threshold = split.threshold;
        tree_.nodes[node].left = li;
        tree_.nodes[node].right = ri;
        return node;
    }

    std::vector<int> sample_features() {
        if (mtry_ >= dim_) return all_features();
        std::vector<int> pool(dim_);
        std::iota(pool.begin(), pool.end(), 0);
        std::vector<int> chosen;
        for (int i = 0; i < mtry_; ++i) {
            const std::size_t j = static_cast<std::size_t>(rng_.below(pool.size()));
            chosen.push_back(pool[j]);
            pool.erase(pool.begin() + static_cast<long>(j));
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    std::vector<int> all_features() const {
        std::vector<int> f(dim_);
        std::iota(f.begin(), f.end(), 0);
        return f;
    }

    SplitChoice best_split(const std::vector<std::size_t>& indices, double node_gini,
                           const std::vector<int>& features) {
        SplitChoice best;
        const long total = static_cast<long>(indices.size());
        std::vector<std::pair<double, int>> column(indices.size());
        std::vector<long> left_counts(n_classes_), right_counts(n_classes_);
        for (int f : features) {
            for (std::size_t i = 0; i < indices.size(); ++i) {
                column[i] = {x_[indices[i]][f], y_[indices[i]]};
            }
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (column.front().first == column.back().first) continue;

            std::fill(left_counts.begin(), left_counts.end(), 0L);
            std::fill(right_counts.begin(), right_counts.end(), 0L);
            for (const auto& [v, c] : column) ++right_counts[c];

            for (long i = 0; i + 1 < total; ++i) {
                ++left_counts[column[i].second];
                --right_counts[column[i].second];
                if (column[i].first == column[i + 1].first) continue;
                const double gl = gini_from_counts(left_counts, i + 1);
                const double gr = gini_from_counts(right_counts, total - i - 1);
                const double weighted =
                    (static_cast<double>(i + 1) * gl + static_cast<double>(total - i - 1) * gr) /
                    static_cast<double>(total);
                if (weighted < best.weighted_gini && weighted < node_gini - 1e-12) {
                    double thr = 0.5 * (column[i].first + column[i + 1].first);
                    if (thr >= column[i + 1].first) thr = column[i].first;
                    best = {f, thr, weighted};
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& x_;
    const std::vector<int>& y_;
    int n_classes_;
    int dim_;
    int mtry_;
    Rng& rng_;
    DecisionTree tree_;
};

}  // namespace

TrainedModel fit_random_forest(const Dataset& train, const FeatureMask& mask, int n_trees,
                               std::uint64_t seed) {
    if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
    TrainedModel m;
    m.kind = ModelKind::RandomForest;
    m.mask = mask;
    m.prep = Preprocessor::fit(train.rows, mask);
    Encoded e = encode(train, m.prep);
    require_two_classes(e, "random forest");
    m.labels = e.labels;

    const int dim = m.prep.output_dim();
    const int mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(dim))));
    const std::size_t n = train.size();

    Forest forest;
    forest.trees.resize(n_trees);
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(seed, static_cast<std::uint64_t>(t));
        std::vector<std::size_t> sample(n);
        if (n_trees == 1) {
            // A lone tree is trained on the full set so it memorizes
            // conflict-free data; bagging with one bag would not.
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        } else {
            for (std::size_t i = 0; i < n; ++i) sample[i] = rng.below(n);
        }
        TreeBuilder builder(e.x, e.y, static_cast<int>(e.labels.size()), dim, mtry, rng);
        forest.trees[t] = builder.build(std::move(sample));
    }
    m.core = std::move(forest);
    return m;
}

TrainedModel fit_knn(const Dataset& train, const FeatureMask& mask, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (static_cast<std::size_t>(k) > train.size()) {
        throw ConfigError("k exceeds the training set size");
    }
    TrainedModel m;
    m.kind = ModelKind::Knn;
    m.mask = mask;
    m.prep = Preprocessor::fit(train.rows, mask);
    Encoded e = encode(train, m.prep);
    m.labels = e.labels;

    KnnStore store;
    store.k = k;
    store.dim = m.prep.output_dim();
    store.labels = e.y;
    store.matrix.reserve(train.size() * store.dim);
    for (const auto& row : e.x) store.matrix.insert(store.matrix.end(), row.begin(), row.end());
    m.core = std::move(store);
    return m;
}

TrainedModel fit_naive_bayes(const Dataset& train, const FeatureMask& mask,
                             const NbParams& params) {
    if (params.laplace_alpha <= 0.0) throw ConfigError("laplace_alpha must be positive");
    if (params.variance_floor <= 0.0) throw ConfigError("variance_floor must be positive");
    TrainedModel m;
    m.kind = ModelKind::NaiveBayes;
    m.mask = mask;
    m.prep = Preprocessor::fit(train.rows, mask);
    Encoded e = encode(train, m.prep);
    require_two_classes(e, "naive bayes");
    m.labels = e.labels;

    const std::size_t n_classes = e.labels.size();
    const int n_num = m.mask.numeric_count();
    NbStats nb;
    nb.laplace_alpha = params.laplace_alpha;
    nb.variance_floor = params.variance_floor;
    nb.class_counts.assign(n_classes, 0);
    nb.means.assign(n_classes, std::vector<double>(n_num, 0.0));
    nb.vars.assign(n_classes, std::vector<double>(n_num, 0.0));
    nb.zone_counts.assign(n_classes, {});

    for (std::size_t i = 0; i < train.size(); ++i) {
        const int c = e.y[i];
        ++nb.class_counts[c];
        for (int f = 0; f < n_num; ++f) nb.means[c][f] += e.x[i][f];
        if (mask.zone) ++nb.zone_counts[c][static_cast<int>(train.rows[i].zone)];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (int f = 0; f < n_num; ++f) nb.means[c][f] /= static_cast<double>(nb.class_counts[c]);
    }
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int c = e.y[i];
        for (int f = 0; f < n_num; ++f) {
            const double d = e.x[i][f] - nb.means[c][f];
            nb.vars[c][f] += d * d;
        }
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (int f = 0; f < n_num; ++f) {
            nb.vars[c][f] = std::max(nb.vars[c][f] / static_cast<double>(nb.class_counts[c]),
                                     nb.variance_floor);
        }
    }
    m.core = std::move(nb);
    return m;
}

// --- MLP --------------------------------------------------------------------

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct MlpScratch {
    std::vector<double> z1, a1, z2, p;
};

void mlp_forward(const MlpNet& net, const double* x, MlpScratch& s) {
    const int h = net.hidden_size, d = net.input_dim, c = net.n_classes;
    const double* w1 = net.params.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(c) * h;

    s.z1.assign(h, 0.0);
    s.a1.assign(h, 0.0);
    for (int j = 0; j < h; ++j) {
        double z = b1[j];
        const double* wj = w1 + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < d; ++i) z += wj[i] * x[i];
        s.z1[j] = z;
        s.a1[j] = sigmoid(z);
    }
    s.z2.assign(c, 0.0);
    for (int k = 0; k < c; ++k) {
        double z = b2[k];
        const double* wk = w2 + static_cast<std::size_t>(k) * h;
        for (int j = 0; j < h; ++j) z += wk[j] * s.a1[j];
        s.z2[k] = z;
    }
    const double zmax = *std::max_element(s.z2.begin(), s.z2.end());
    double denom = 0.0;
    s.p.assign(c, 0.0);
    for (int k = 0; k < c; ++k) {
        s.p[k] = std::exp(s.z2[k] - zmax);
        denom += s.p[k];
    }
    for (int k = 0; k < c; ++k) s.p[k] /= denom;
}

}  // namespace

std::vector<double> MlpNet::probabilities(const double* x) const {
    MlpScratch s;
    mlp_forward(*this, x, s);
    return s.p;
}

double MlpNet::sample_loss(const double* x, int label) const {
    MlpScratch s;
    mlp_forward(*this, x, s);
    const double zmax = *std::max_element(s.z2.begin(), s.z2.end());
    double denom = 0.0;
    for (double z : s.z2) denom += std::exp(z - zmax);
    return std::log(denom) + zmax - s.z2[label];
}

void MlpNet::add_sample_gradient(const double* x, int label, std::vector<double>& grad) const {
    const int h = hidden_size, d = input_dim, c = n_classes;
    MlpScratch s;
    mlp_forward(*this, x, s);

    const std::size_t w1_off = 0;
    const std::size_t b1_off = static_cast<std::size_t>(h) * d;
    const std::size_t w2_off = b1_off + h;
    const std::size_t b2_off = w2_off + static_cast<std::size_t>(c) * h;
    const double* w2 = params.data() + w2_off;

    std::vector<double> dz2(c);
    for (int k = 0; k < c; ++k) dz2[k] = s.p[k] - (k == label ? 1.0 : 0.0);

    for (int k = 0; k < c; ++k) {
        for (int j = 0; j < h; ++j) {
            grad[w2_off + static_cast<std::size_t>(k) * h + j] += dz2[k] * s.a1[j];
        }
        grad[b2_off + k] += dz2[k];
    }
    for (int j = 0; j < h; ++j) {
        double da1 = 0.0;
        for (int k = 0; k < c; ++k) da1 += w2[static_cast<std::size_t>(k) * h + j] * dz2[k];
        const double dz1 = da1 * s.a1[j] * (1.0 - s.a1[j]);
        for (int i = 0; i < d; ++i) {
            grad[w1_off + static_cast<std::size_t>(j) * d + i] += dz1 * x[i];
        }
        grad[b1_off + j] += dz1;
    }
}

TrainedModel fit_mlp(const Dataset& train, const FeatureMask& mask, int hidden_size,
                     const MlpParams& params, std::uint64_t seed) {
    if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
    if (params.epochs < 1) throw ConfigError("epochs must be >= 1");
    TrainedModel m;
    m.kind = ModelKind::Mlp;
    m.mask = mask;
    m.prep = Preprocessor::fit(train.rows, mask);
    Encoded e = encode(train, m.prep);
    m.labels = e.labels;

    MlpNet net;
    net.input_dim = m.prep.output_dim();
    net.hidden_size = hidden_size;
    net.n_classes = static_cast<int>(e.labels.size());
    net.params.resize(net.param_count());

    Rng rng(seed);
    for (auto& w : net.params) w = rng.uniform(-0.5, 0.5);

    const std::size_t n = train.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    const int h = net.hidden_size, d = net.input_dim, c = net.n_classes;
    const std::size_t b1_off = static_cast<std::size_t>(h) * d;
    const std::size_t w2_off = b1_off + h;
    const std::size_t b2_off = w2_off + static_cast<std::size_t>(c) * h;

    MlpScratch s;
    std::vector<double> dz2(c);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double* x = e.x[i].data();
            const int label = e.y[i];
            mlp_forward(net, x, s);

            const double zmax = *std::max_element(s.z2.begin(), s.z2.end());
            double denom = 0.0;
            for (double z : s.z2) denom += std::exp(z - zmax);
            const double loss = std::log(denom) + zmax - s.z2[label];
            if (!std::isfinite(loss)) {
                throw NonFiniteLoss("mlp training loss is not finite (epoch " +
                                    std::to_string(epoch) + ")");
            }

            for (int k = 0; k < c; ++k) dz2[k] = s.p[k] - (k == label ? 1.0 : 0.0);
            const double lr = params.learning_rate;
            double* w2 = net.params.data() + w2_off;
            // Backprop through w2 needs the pre-update weights.
            std::vector<double> da1(h, 0.0);
            for (int k = 0; k < c; ++k) {
                for (int j = 0; j < h; ++j) {
                    da1[j] += w2[static_cast<std::size_t>(k) * h + j] * dz2[k];
                }
            }
            for (int k = 0; k < c; ++k) {
                double* wk = w2 + static_cast<std::size_t>(k) * h;
                for (int j = 0; j < h; ++j) wk[j] -= lr * dz2[k] * s.a1[j];
                net.params[b2_off + k] -= lr * dz2[k];
            }
            double* w1 = net.params.data();
            for (int j = 0; j < h; ++j) {
                const double dz1 = da1[j] * s.a1[j] * (1.0 - s.a1[j]);
                double* wj = w1 + static_cast<std::size_t>(j) * d;
                for (int i2 = 0; i2 < d; ++i2) wj[i2] -= lr * dz1 * x[i2];
                net.params[b1_off + j] -= lr * dz1;
            }
        }
    }
    m.core = std::move(net);
    return m;
}

// --- SVM --------------------------------------------------------------------

TrainedModel fit_svm(const Dataset& train, const FeatureMask& mask, double lambda,
                     const SvmParams& params, std::uint64_t seed) {
    if (lambda <= 0.0) throw ConfigError("lambda must be positive");
    if (params.epochs < 1) throw ConfigError("epochs must be >= 1");
    TrainedModel m;
    m.kind = ModelKind::Svm;
    m.mask = mask;
    m.prep = Preprocessor::fit(train.rows, mask);
    Encoded e = encode(train, m.prep);
    require_two_classes(e, "svm");
    m.labels = e.labels;

    const int dim = m.prep.output_dim();
    const std::size_t n = train.size();

    SvmOvr ovr;
    ovr.lambda = lambda;
    ovr.problems.resize(e.labels.size());
    for (std::size_t c = 0; c < e.labels.size(); ++c) {
        SvmProblem prob;
        prob.weights.assign(dim, 0.0);
        prob.bias = 0.0;
        Rng rng(seed, c);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Pegasos schedule: learning rate 1/(lambda * t) across all epochs.
        long t = 0;
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            rng.shuffle(order);
            for (std::size_t i : order) {
                ++t;
                const double eta = 1.0 / (lambda * static_cast<double>(t));
                const double y = e.y[i] == static_cast<int>(c) ? 1.0 : -1.0;
                const double* x = e.x[i].data();
                double margin = prob.bias;
                for (int f = 0; f < dim; ++f) margin += prob.weights[f] * x[f];
                const double scale = 1.0 - eta * lambda;
                if (y * margin < 1.0) {
                    for (int f = 0; f < dim; ++f) {
                        prob.weights[f] = scale * prob.weights[f] + eta * y * x[f];
                    }
                    prob.bias += eta * y;  // bias stays unregularized
                } else {
                    for (int f = 0; f < dim; ++f) prob.weights[f] *= scale;
                }
            }
        }
        ovr.problems[c] = std::move(prob);
    }
    m.core = std::move(ovr);
    return m;
}

// --- shared predict ---------------------------------------------------------

std::string TrainedModel::predict_one(const Row& row) const {
    const std::vector<double> x = prep.transform(row);
    std::size_t label_idx = 0;

    if (const auto* forest = std::get_if<Forest>(&core)) {
        std::vector<double> votes(labels.size(), 0.0);
        for (const auto& tree : forest->trees) votes[tree.predict(x.data())] += 1.0;
        label_idx = argmax_tie_smallest(votes);
    } else if (const auto* knn = std::get_if<KnnStore>(&core)) {
        const std::size_t n = knn->labels.size();
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = knn->matrix.data() + i * knn->dim;
            double d2 = 0.0;
            for (int f = 0; f < knn->dim; ++f) {
                const double d = r[f] - x[f];
                d2 += d * d;
            }
            dist[i] = {d2, i};
        }
        const std::size_t k = static_cast<std::size_t>(knn->k);
        // Distance ties resolve to the smaller row index via the pair order.
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        std::vector<double> votes(labels.size(), 0.0);
        for (std::size_t i = 0; i < k; ++i) votes[knn->labels[dist[i].second]] += 1.0;
        label_idx = argmax_tie_smallest(votes);
    } else if (std::get_if<NbStats>(&core)) {
        label_idx = argmax_tie_smallest(nb_posterior(row));
    } else if (const auto* net = std::get_if<MlpNet>(&core)) {
        label_idx = argmax_tie_smallest(net->probabilities(x.data()));
    } else if (const auto* ovr = std::get_if<SvmOvr>(&core)) {
        std::vector<double> margins(ovr->problems.size(), 0.0);
        for (std::size_t c = 0; c < ovr->problems.size(); ++c) {
            const auto& prob = ovr->problems[c];
            double margin = prob.bias;
            for (std::size_t f = 0; f < prob.weights.size(); ++f) margin += prob.weights[f] * x[f];
            margins[c] = margin;
        }
        label_idx = argmax_tie_smallest(margins);
    }
    return labels[label_idx];
}

std::vector<std::string> TrainedModel::predict(std::span<const Row> rows) const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(predict_one(r));
    return out;
}

std::vector<double> TrainedModel::nb_posterior(const Row& row) const {
    const auto* nb = std::get_if<NbStats>(&core);
    if (!nb) throw ConfigError("nb_posterior is only defined for naive bayes models");

    const std::vector<double> x = prep.transform(row);
    const int n_num = mask.numeric_count();
    long total = 0;
    for (long c : nb->class_counts) total += c;

    std::vector<double> scores(labels.size(), 0.0);
    for (std::size_t c = 0; c < labels.size(); ++c) {
        double s = std::log(static_cast<double>(nb->class_counts[c]) / static_cast<double>(total));
        for (int f = 0; f < n_num; ++f) {
            const double var = nb->vars[c][f];
            const double d = x[f] - nb->means[c][f];
            s += -0.5 * std::log(6.283185307179586 * var) - d * d / (2.0 * var);
        }
        if (mask.zone) {
            const double num = static_cast<double>(nb->zone_counts[c][static_cast<int>(row.zone)]) +
                               nb->laplace_alpha;
            const double den = static_cast<double>(nb->class_counts[c]) +
                               nb->laplace_alpha * kZoneCategoryCount;
            s += std::log(num / den);
        }
        scores[c] = s;
    }
    const double smax = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    std::vector<double> post(labels.size(), 0.0);
    for (std::size_t c = 0; c < labels.size(); ++c) {
        post[c] = std::exp(scores[c] - smax);
        denom += post[c];
    }
    for (auto& p : post) p /= denom;
    return post;
}

// --- dispatch ---------------------------------------------------------------

TrainedModel fit(ModelKind kind, const Dataset& train, const FeatureMask& mask, double param,
                 const Hyperparams& hp, std::uint64_t seed) {
    switch (kind) {
        case ModelKind::RandomForest:
            return fit_random_forest(train, mask, static_cast<int>(std::lround(param)), seed);
        case ModelKind::Knn:
            return fit_knn(train, mask, static_cast<int>(std::lround(param)));
        case ModelKind::NaiveBayes: {
            NbParams nb = hp.nb;
            nb.laplace_alpha = param;
            return fit_naive_bayes(train, mask, nb);
        }
        case ModelKind::Mlp:
            return fit_mlp(train, mask, static_cast<int>(std::lround(param)), hp.mlp, seed);
        case ModelKind::Svm:
            return fit_svm(train, mask, param, hp.svm, seed);
    }
    throw ConfigError("unknown model kind");
}

std::vector<double> grid_values(ModelKind kind, const Hyperparams& hp) {
    std::vector<double> out;
    switch (kind) {
        case ModelKind::RandomForest:
            for (int v : hp.rf.tree_grid) out.push_back(v);
            break;
        case ModelKind::Knn:
            for (int v : hp.knn.k_grid) out.push_back(v);
            break;
        case ModelKind::NaiveBayes:
            out.push_back(hp.nb.laplace_alpha);
            break;
        case ModelKind::Mlp:
            for (int v : hp.mlp.hidden_grid) out.push_back(v);
            break;
        case ModelKind::Svm:
            out = hp.svm.lambda_grid;
            break;
    }
    if (out.empty()) throw ConfigError("hyperparameter grid is empty");
    for (double v : out) {
        if (v <= 0.0) throw ConfigError("hyperparameter grid values must be positive");
    }
    return out;
}

// --- serialization ----------------------------------------------------------

namespace {

using json = nlohmann::ordered_json;

json mask_to_json(const FeatureMask& mask) {
    json numeric = json::array();
    for (bool b : mask.numeric) numeric.push_back(b);
    return {{"numeric", numeric}, {"zone", mask.zone}};
}

FeatureMask mask_from_json(const json& j) {
    FeatureMask mask;
    for (int i = 0; i < 7; ++i) mask.numeric[i] = j.at("numeric").at(i).get<bool>();
    mask.zone = j.at("zone").get<bool>();
    return mask;
}

}  // namespace

void save(const TrainedModel& m, const std::string& path) {
    json doc;
    doc["format"] = "lotkit-model";
    doc["version"] = 1;
    doc["kind"] = to_string(m.kind);
    doc["mask"] = mask_to_json(m.mask);
    doc["labels"] = m.labels;
    doc["preprocessor"] = {{"means", m.prep.means()}, {"stds", m.prep.stds()}};

    json core;
    if (const auto* forest = std::get_if<Forest>(&m.core)) {
        json trees = json::array();
        for (const auto& tree : forest->trees) {
            json nodes = json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
            }
            trees.push_back(std::move(nodes));
        }
        core = {{"trees", trees}};
    } else if (const auto* knn = std::get_if<KnnStore>(&m.core)) {
        core = {{"k", knn->k}, {"dim", knn->dim}, {"matrix", knn->matrix}, {"labels", knn->labels}};
    } else if (const auto* nb = std::get_if<NbStats>(&m.core)) {
        json zones = json::array();
        for (const auto& zc : nb->zone_counts) zones.push_back({zc[0], zc[1], zc[2], zc[3]});
        core = {{"alpha", nb->laplace_alpha},   {"variance_floor", nb->variance_floor},
                {"class_counts", nb->class_counts}, {"means", nb->means},
                {"vars", nb->vars},             {"zone_counts", zones}};
    } else if (const auto* net = std::get_if<MlpNet>(&m.core)) {
        core = {{"input_dim", net->input_dim},
                {"hidden_size", net->hidden_size},
                {"n_classes", net->n_classes},
                {"params", net->params}};
    } else if (const auto* ovr = std::get_if<SvmOvr>(&m.core)) {
        json problems = json::array();
        for (const auto& p : ovr->problems) {
            problems.push_back({{"weights", p.weights}, {"bias", p.bias}});
        }
        core = {{"lambda", ovr->lambda}, {"problems", problems}};
    }
    doc["core"] = std::move(core);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
}

TrainedModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    if (doc.value("format", "") != "lotkit-model" || doc.value("version", 0) != 1) {
        throw SchemaError("'" + path + "': not a version-1 model file");
    }

    TrainedModel m;
    m.kind = model_kind_from_string(doc.at("kind").get<std::string>());
    m.mask = mask_from_json(doc.at("mask"));
    m.labels = doc.at("labels").get<std::vector<std::string>>();
    m.prep = Preprocessor::restore(m.mask, doc.at("preprocessor").at("means").get<std::vector<double>>(),
                                   doc.at("preprocessor").at("stds").get<std::vector<double>>());

    const json& core = doc.at("core");
    switch (m.kind) {
        case ModelKind::RandomForest: {
            Forest forest;
            for (const auto& tj : core.at("trees")) {
                DecisionTree tree;
                for (const auto& nj : tj) {
                    tree.nodes.push_back(TreeNode{nj.at(0).get<int>(), nj.at(1).get<double>(),
                                                  nj.at(2).get<int>(), nj.at(3).get<int>(),
                                                  nj.at(4).get<int>()});
                }
                forest.trees.push_back(std::move(tree));
            }
            m.core = std::move(forest);
            break;
        }
        case ModelKind::Knn: {
            KnnStore store;
            store.k = core.at("k").get<int>();
            store.dim = core.at("dim").get<int>();
            store.matrix = core.at("matrix").get<std::vector<double>>();
            store.labels = core.at("labels").get<std::vector<int>>();
            m.core = std::move(store);
            break;
        }
        case ModelKind::NaiveBayes: {
            NbStats nb;
            nb.laplace_alpha = core.at("alpha").get<double>();
            nb.variance_floor = core.at("variance_floor").get<double>();
            nb.class_counts = core.at("class_counts").get<std::vector<long>>();
            nb.means = core.at("means").get<std::vector<std::vector<double>>>();
            nb.vars = core.at("vars").get<std::vector<std::vector<double>>>();
            for (const auto& zj : core.at("zone_counts")) {
                nb.zone_counts.push_back({zj.at(0).get<long>(), zj.at(1).get<long>(),
                                          zj.at(2).get<long>(), zj.at(3).get<long>()});
            }
            m.core = std::move(nb);
            break;
        }
        case ModelKind::Mlp: {
            MlpNet net;
            net.input_dim = core.at("input_dim").get<int>();
            net.hidden_size = core.at("hidden_size").get<int>();
            net.n_classes = core.at("n_classes").get<int>();
            net.params = core.at("params").get<std::vector<double>>();
            if (net.params.size() != net.param_count()) {
                throw SchemaError("'" + path + "': mlp parameter count mismatch");
            }
            m.core = std::move(net);
            break;
        }
        case ModelKind::Svm: {
            SvmOvr ovr;
            ovr.lambda = core.at("lambda").get<double>();
            for (const auto& pj : core.at("problems")) {
                ovr.problems.push_back(
                    SvmProblem{pj.at("weights").get<std::vector<double>>(), pj.at("bias").get<double>()});
            }
            m.core = std::move(ovr);
            break;
        }
    }
    return m;
}

}  // namespace lotkit::model
