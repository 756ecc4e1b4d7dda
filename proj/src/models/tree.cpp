#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace mhnt::learn {

namespace detail {

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
    double g = 1.0;
    for (std::size_t c : counts) {
        double p = double(c) / double(total);
        g -= p * p;
    }
    return g;
}

struct TreeBuilder {
    const std::vector<Row>& X;
    const std::vector<int>& y;
    std::size_t n_classes;
    int max_depth;
    int min_leaf;
    int features_per_split;
    std::mt19937_64* rng;
    std::vector<TreeNode> nodes;

    int make_leaf(const std::vector<std::size_t>& counts, std::size_t total) {
        TreeNode leaf;
        leaf.probs.resize(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c)
            leaf.probs[c] = double(counts[c]) / double(total);
        nodes.push_back(std::move(leaf));
        return int(nodes.size()) - 1;
    }

    // Feature order for one node. Subsampling shuffles all features and the
    // caller consumes them in chunks of features_per_split: the search widens
    // past the first chunk only while no valid split has been found, the usual
    // forest behavior when the drawn features are constant within the node.
    std::vector<int> feature_order() {
        std::size_t dims = X[0].size();
        std::vector<int> feats(dims);
        std::iota(feats.begin(), feats.end(), 0);
        if (features_per_split > 0 && std::size_t(features_per_split) < dims)
            std::shuffle(feats.begin(), feats.end(), *rng);
        return feats;
    }

    int build(std::vector<std::uint32_t>& idx, int depth) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::uint32_t i : idx)
            ++counts[std::size_t(y[i])];
        std::size_t total = idx.size();

        bool pure = std::count(counts.begin(), counts.end(), total) > 0;
        if (pure || depth >= max_depth || total < std::size_t(2 * min_leaf))
            return make_leaf(counts, total);

        double node_impurity = gini(counts, total);
        int best_feature = -1;
        double best_threshold = 0;
        double best_weighted = node_impurity - 1e-12;

        std::vector<int> order = feature_order();
        std::size_t dims = order.size();
        std::size_t chunk =
            features_per_split > 0 && std::size_t(features_per_split) < dims
                ? std::size_t(features_per_split)
                : dims;

        std::vector<std::uint32_t> sorted = idx;
        std::vector<std::size_t> left_counts(n_classes);
        for (std::size_t begin = 0; begin < dims && best_feature < 0;
             begin += chunk) {
            std::size_t end = std::min(begin + chunk, dims);
            // Ascending order inside the chunk so equal-impurity ties still
            // resolve to the lowest feature index.
            std::vector<int> feats(order.begin() + std::ptrdiff_t(begin),
                                   order.begin() + std::ptrdiff_t(end));
            std::sort(feats.begin(), feats.end());
            for (int f : feats) {
                std::sort(sorted.begin(), sorted.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                              return X[a][std::size_t(f)] < X[b][std::size_t(f)];
                          });
                std::fill(left_counts.begin(), left_counts.end(), 0);
                for (std::size_t pos = 0; pos + 1 < total; ++pos) {
                    ++left_counts[std::size_t(y[sorted[pos]])];
                    double lo = X[sorted[pos]][std::size_t(f)];
                    double hi = X[sorted[pos + 1]][std::size_t(f)];
                    if (lo == hi)
                        continue;
                    std::size_t nl = pos + 1;
                    std::size_t nr = total - nl;
                    if (nl < std::size_t(min_leaf) || nr < std::size_t(min_leaf))
                        continue;
                    double gl = 1.0, gr = 1.0;
                    for (std::size_t c = 0; c < n_classes; ++c) {
                        double pl = double(left_counts[c]) / double(nl);
                        double pr =
                            double(counts[c] - left_counts[c]) / double(nr);
                        gl -= pl * pl;
                        gr -= pr * pr;
                    }
                    double weighted =
                        (double(nl) * gl + double(nr) * gr) / double(total);
                    if (weighted < best_weighted) {
                        best_weighted = weighted;
                        best_feature = f;
                        best_threshold = lo + (hi - lo) / 2;
                    }
                }
            }
        }

        if (best_feature < 0)
            return make_leaf(counts, total);

        std::vector<std::uint32_t> left, right;
        left.reserve(total);
        right.reserve(total);
        for (std::uint32_t i : idx)
            if (X[i][std::size_t(best_feature)] <= best_threshold)
                left.push_back(i);
            else
                right.push_back(i);
        if (left.empty() || right.empty())  // numeric midpoint degeneracy
            return make_leaf(counts, total);

        TreeNode node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes.push_back(node);
        int self = int(nodes.size()) - 1;
        idx.clear();
        idx.shrink_to_fit();
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        nodes[std::size_t(self)].left = l;
        nodes[std::size_t(self)].right = r;
        return self;
    }
};

}  // namespace

TreeParams fit_tree(const std::vector<Row>& X, const std::vector<int>& y,
                    const std::vector<std::uint32_t>& idx, std::size_t n_classes,
                    int max_depth, int min_leaf, int features_per_split,
                    std::mt19937_64* rng) {
    if (idx.empty())
        throw ValidationError("cannot grow a tree on zero samples");
    if (features_per_split > 0 && rng == nullptr)
        throw ValidationError("feature subsampling requires an rng");
    TreeBuilder builder{X, y, n_classes, max_depth, min_leaf, features_per_split,
                        rng, {}};
    std::vector<std::uint32_t> root = idx;
    builder.build(root, 0);
    return TreeParams{std::move(builder.nodes)};
}

const std::vector<double>& tree_leaf_probs(const TreeParams& t, const Row& x) {
    std::size_t i = 0;
    while (!t.nodes[i].leaf()) {
        const TreeNode& n = t.nodes[i];
        i = std::size_t(x[std::size_t(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return t.nodes[i].probs;
}

TreeParams fit_dt(const std::vector<Row>& Xs, const std::vector<int>& y,
                  std::size_t n_classes, const HyperParams& hyper) {
    std::vector<std::uint32_t> idx(Xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    return fit_tree(Xs, y, idx, n_classes, hyper.dt_max_depth, hyper.dt_min_leaf,
                    0, nullptr);
}

}  // namespace detail

}  // namespace mhnt::learn
