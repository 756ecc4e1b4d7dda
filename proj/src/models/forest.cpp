#include <numeric>

#include "internal.hpp"

namespace mhnt::learn::detail {

ForestParams fit_rf(const std::vector<Row>& Xs, const std::vector<int>& y,
                    std::size_t n_classes, const HyperParams& hyper,
                    std::uint64_t seed) {
    if (hyper.rf_trees <= 0)
        throw ValidationError("random forest needs at least one tree");
    ForestParams forest;
    forest.trees.reserve(std::size_t(hyper.rf_trees));
    std::size_t n = Xs.size();
    for (int t = 0; t < hyper.rf_trees; ++t) {
        std::mt19937_64 rng(derive_seed(seed, 0xF0000 + std::size_t(t)));
        std::vector<std::uint32_t> idx(n);
        if (hyper.rf_bootstrap) {
            for (auto& i : idx)
                i = std::uint32_t(rng() % n);
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        forest.trees.push_back(fit_tree(Xs, y, idx, n_classes, hyper.dt_max_depth,
                                        hyper.dt_min_leaf,
                                        hyper.rf_features_per_split, &rng));
    }
    return forest;
}

std::vector<double> rf_scores(const ForestParams& p, const Row& x,
                              std::size_t n_classes) {
    std::vector<double> votes(n_classes, 0.0);
    for (const TreeParams& tree : p.trees) {
        const std::vector<double>& probs = tree_leaf_probs(tree, x);
        votes[std::size_t(argmax_lowest(probs))] += 1.0;
    }
    for (double& v : votes)
        v /= double(p.trees.size());
    return votes;
}

}  // namespace mhnt::learn::detail
