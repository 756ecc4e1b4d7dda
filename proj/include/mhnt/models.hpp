#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mhnt/dataset.hpp"

namespace mhnt::learn {

enum class ModelKind : std::uint8_t { Dt = 0, Rf = 1, Svm = 2, Nb = 3, Mlp = 4, Gbt = 5 };
constexpr std::size_t kModelKindCount = 6;

std::string model_kind_name(ModelKind k);  // "dt" "rf" "svm" "nb" "mlp" "gbt"
ModelKind model_kind_from_name(const std::string& name);

struct HyperParams {
    // decision tree
    int dt_max_depth = 20;
    int dt_min_leaf = 1;
    // random forest
    int rf_trees = 100;
    bool rf_bootstrap = true;
    int rf_features_per_split = 5;  // 0 disables feature subsampling
    // linear svm (one-vs-rest, regularized hinge)
    int svm_epochs = 30;
    double svm_lambda = 1e-4;
    // gaussian nb
    double nb_smoothing = 1e-9;  // times the largest per-feature variance
    // mlp
    int mlp_hidden = 64;
    int mlp_batch = 32;
    double mlp_lr = 0.01;
    int mlp_epochs = 50;
    // gradient-boosted trees
    int gbt_rounds = 100;
    int gbt_max_depth = 4;
    double gbt_shrinkage = 0.1;
    int gbt_max_bins = 256;
    double gbt_l2 = 1.0;
};

// Classification tree node. Internal nodes test x[feature] <= threshold
// (left on true); leaves carry feature == -1 and per-class probabilities.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<double> probs;

    bool leaf() const { return feature < 0; }
};

struct TreeParams {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
    std::vector<TreeParams> trees;
};

struct SvmParams {
    std::vector<std::vector<double>> weights;  // one weight vector per class
    std::vector<double> bias;
};

struct NbParams {
    std::vector<std::vector<double>> mean;  // [class][feature]
    std::vector<std::vector<double>> var;
    std::vector<double> prior;
};

struct MlpParams {
    std::int32_t inputs = 0;
    std::int32_t hidden = 0;
    std::int32_t outputs = 0;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;
    std::vector<double> w2;  // outputs x hidden
    std::vector<double> b2;
};

// Regression tree for boosting; same split convention as TreeNode.
struct RegNode {
    std::int32_t feature = -1;
    double threshold = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0;
};

struct RegTree {
    std::vector<RegNode> nodes;

    double predict(const Row& x) const;
};

struct GbtParams {
    double shrinkage = 0.1;
    std::vector<double> base;                 // initial score per slot
    std::vector<std::vector<RegTree>> rounds;  // [round][slot]; binary has 1 slot
};

struct TrainedModel {
    ModelKind kind{};
    Mode mode{};
    std::vector<std::string> class_names;
    std::vector<double> scaler_mean;  // per-feature standardization
    std::vector<double> scaler_std;   // zero-variance features get std 1
    std::uint64_t train_seed = 0;
    double final_loss = 0;             // svm/mlp/gbt record training loss
    std::vector<double> loss_history;  // mlp per epoch, gbt per round
    std::variant<TreeParams, ForestParams, SvmParams, NbParams, MlpParams,
                 GbtParams>
        params;
};

struct Prediction {
    std::vector<int> labels;
    std::vector<std::vector<double>> scores;  // rows sum to 1
};

/// Deterministic per (kind, dataset, hyper, seed). Standardization is fitted
/// on the given data. Throws ValidationError on malformed datasets and Error
/// on MLP divergence (names the epoch).
TrainedModel train(ModelKind kind, const Dataset& d, const HyperParams& hyper,
                   std::uint64_t seed);

/// Rows must be 24 wide; throws ValidationError otherwise. Label is the
/// argmax score, lowest class index on ties.
Prediction predict(const TrainedModel& m, const std::vector<Row>& X);

void save_model(const TrainedModel& m, const std::string& path);
TrainedModel load_model(const std::string& path);

namespace detail {

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std;

    static Standardizer fit(const std::vector<Row>& X);
    Row apply(const Row& x) const;
    std::vector<Row> apply_all(const std::vector<Row>& X) const;
};

/// Grows a CART classification tree on pre-standardized data. `features_per_split`
/// 0 means consider every feature; otherwise that many are drawn per node from
/// `rng` (which must be non-null).
TreeParams fit_tree(const std::vector<Row>& X, const std::vector<int>& y,
                    const std::vector<std::uint32_t>& idx, std::size_t n_classes,
                    int max_depth, int min_leaf, int features_per_split,
                    std::mt19937_64* rng);

const std::vector<double>& tree_leaf_probs(const TreeParams& t, const Row& x);

/// Full-batch mean cross-entropy of an MLP on (X, y).
double mlp_loss(const MlpParams& p, const std::vector<Row>& X,
                const std::vector<int>& y);

/// Analytic gradient of mlp_loss over the listed rows (all rows if empty).
MlpParams mlp_gradient(const MlpParams& p, const std::vector<Row>& X,
                       const std::vector<int>& y,
                       const std::vector<std::uint32_t>& batch);

}  // namespace detail

}  // namespace mhnt::learn
