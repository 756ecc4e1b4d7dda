#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace mhnt::learn {

double RegTree::predict(const Row& x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const RegNode& n = nodes[i];
        i = std::size_t(x[std::size_t(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

namespace detail {

namespace {

// Per-feature quantile bin edges over the training matrix. A value lands in
// bin b where b is the first edge >= value (bins <= b iff x <= edges[b]).
std::vector<std::vector<double>> fit_edges(const std::vector<Row>& X,
                                           std::size_t max_bins) {
    std::size_t dims = X[0].size();
    std::vector<std::vector<double>> edges(dims);
    std::vector<double> vals(X.size());
    for (std::size_t f = 0; f < dims; ++f) {
        for (std::size_t i = 0; i < X.size(); ++i)
            vals[i] = X[i][f];
        std::sort(vals.begin(), vals.end());
        std::vector<double> distinct;
        for (double v : vals)
            if (distinct.empty() || v != distinct.back())
                distinct.push_back(v);
        std::vector<double>& e = edges[f];
        if (distinct.size() <= max_bins) {
            for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
                e.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2);
        } else {
            for (std::size_t b = 1; b < max_bins; ++b) {
                std::size_t pos = b * vals.size() / max_bins;
                double lo = vals[pos - 1], hi = vals[pos];
                if (lo == hi)
                    continue;
                double mid = lo + (hi - lo) / 2;
                if (e.empty() || mid > e.back())
                    e.push_back(mid);
            }
        }
    }
    return edges;
}

std::uint8_t bin_of(const std::vector<double>& edges, double x) {
    return std::uint8_t(std::lower_bound(edges.begin(), edges.end(), x) -
                        edges.begin());
}

struct RegTreeBuilder {
    const std::vector<std::uint8_t>& bins;  // row-major n x dims
    std::size_t dims;
    const std::vector<std::vector<double>>& edges;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    double lambda;
    int max_depth;
    std::vector<RegNode> nodes;
    // scratch, sized for the widest feature
    std::vector<double> hg, hh;
    std::vector<std::uint32_t> hc;

    int make_leaf(double g, double h) {
        RegNode leaf;
        leaf.value = -g / (h + lambda);
        nodes.push_back(leaf);
        return int(nodes.size()) - 1;
    }

    int build(std::vector<std::uint32_t>& rows, int depth) {
        double G = 0, H = 0;
        for (std::uint32_t i : rows) {
            G += grad[i];
            H += hess[i];
        }
        if (depth >= max_depth || rows.size() < 2)
            return make_leaf(G, H);

        double parent_score = G * G / (H + lambda);
        int best_feature = -1;
        std::size_t best_bin = 0;
        double best_gain = 1e-12;

        for (std::size_t f = 0; f < dims; ++f) {
            std::size_t nbins = edges[f].size() + 1;
            if (nbins < 2)
                continue;
            std::fill(hg.begin(), hg.begin() + std::ptrdiff_t(nbins), 0.0);
            std::fill(hh.begin(), hh.begin() + std::ptrdiff_t(nbins), 0.0);
            std::fill(hc.begin(), hc.begin() + std::ptrdiff_t(nbins), 0u);
            for (std::uint32_t i : rows) {
                std::uint8_t b = bins[i * dims + f];
                hg[b] += grad[i];
                hh[b] += hess[i];
                ++hc[b];
            }
            double GL = 0, HL = 0;
            std::uint32_t CL = 0;
            for (std::size_t b = 0; b + 1 < nbins; ++b) {
                GL += hg[b];
                HL += hh[b];
                CL += hc[b];
                if (CL == 0)
                    continue;
                if (CL == rows.size())
                    break;
                double GR = G - GL, HR = H - HL;
                double gain = GL * GL / (HL + lambda) + GR * GR / (HR + lambda) -
                              parent_score;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = int(f);
                    best_bin = b;
                }
            }
        }

        if (best_feature < 0)
            return make_leaf(G, H);

        std::vector<std::uint32_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (std::uint32_t i : rows)
            if (bins[i * dims + std::size_t(best_feature)] <= best_bin)
                left.push_back(i);
            else
                right.push_back(i);

        RegNode node;
        node.feature = best_feature;
        node.threshold = edges[std::size_t(best_feature)][best_bin];
        nodes.push_back(node);
        int self = int(nodes.size()) - 1;
        rows.clear();
        rows.shrink_to_fit();
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        nodes[std::size_t(self)].left = l;
        nodes[std::size_t(self)].right = r;
        return self;
    }
};

RegTree fit_reg_tree(const std::vector<std::uint8_t>& bins, std::size_t n,
                     std::size_t dims, const std::vector<std::vector<double>>& edges,
                     const std::vector<double>& grad, const std::vector<double>& hess,
                     double lambda, int max_depth, std::size_t max_bins) {
    RegTreeBuilder builder{bins,   dims, edges, grad, hess, lambda,
                           max_depth, {},   {},    {},   {}};
    builder.hg.resize(max_bins);
    builder.hh.resize(max_bins);
    builder.hc.resize(max_bins);
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    builder.build(rows, 0);
    return RegTree{std::move(builder.nodes)};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::pair<GbtParams, std::vector<double>> fit_gbt(const std::vector<Row>& Xs,
                                                  const std::vector<int>& y,
                                                  std::size_t n_classes,
                                                  const HyperParams& hyper) {
    if (hyper.gbt_max_bins < 2 || hyper.gbt_max_bins > 256)
        throw ValidationError("gbt bins must lie in [2, 256]");
    std::size_t n = Xs.size();
    std::size_t dims = Xs[0].size();
    bool binary = n_classes == 2;
    std::size_t slots = binary ? 1 : n_classes;

    auto edges = fit_edges(Xs, std::size_t(hyper.gbt_max_bins));
    std::vector<std::uint8_t> bins(n * dims);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < dims; ++f)
            bins[i * dims + f] = bin_of(edges[f], Xs[i][f]);

    GbtParams params;
    params.shrinkage = hyper.gbt_shrinkage;
    params.base.assign(slots, 0.0);
    if (binary) {
        double p1 = 0;
        for (int label : y)
            p1 += label;
        p1 = std::clamp(p1 / double(n), 1e-6, 1.0 - 1e-6);
        params.base[0] = std::log(p1 / (1 - p1));
    } else {
        for (int label : y)
            params.base[std::size_t(label)] += 1;
        for (double& b : params.base)
            b = std::log(std::max(b / double(n), 1e-12));
    }

    std::vector<std::vector<double>> F(slots, std::vector<double>(n));
    for (std::size_t s = 0; s < slots; ++s)
        std::fill(F[s].begin(), F[s].end(), params.base[s]);

    std::vector<double> grad(n), hess(n);
    std::vector<std::vector<double>> prob(slots, std::vector<double>(n));
    std::vector<double> history;
    history.reserve(std::size_t(hyper.gbt_rounds));

    for (int round = 0; round < hyper.gbt_rounds; ++round) {
        if (binary) {
            for (std::size_t i = 0; i < n; ++i)
                prob[0][i] = sigmoid(F[0][i]);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double mx = F[0][i];
                for (std::size_t s = 1; s < slots; ++s)
                    mx = std::max(mx, F[s][i]);
                double sum = 0;
                for (std::size_t s = 0; s < slots; ++s) {
                    double e = std::exp(F[s][i] - mx);
                    prob[s][i] = e;
                    sum += e;
                }
                for (std::size_t s = 0; s < slots; ++s)
                    prob[s][i] /= sum;
            }
        }

        params.rounds.emplace_back();
        for (std::size_t s = 0; s < slots; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double p = prob[s][i];
                double target = binary ? double(y[i]) : (std::size_t(y[i]) == s);
                grad[i] = p - target;
                hess[i] = std::max(p * (1 - p), 1e-12);
            }
            RegTree tree = fit_reg_tree(bins, n, dims, edges, grad, hess,
                                        hyper.gbt_l2, hyper.gbt_max_depth,
                                        std::size_t(hyper.gbt_max_bins));
            for (std::size_t i = 0; i < n; ++i)
                F[s][i] += hyper.gbt_shrinkage * tree.predict(Xs[i]);
            params.rounds.back().push_back(std::move(tree));
        }

        double loss = 0;
        if (binary) {
            for (std::size_t i = 0; i < n; ++i) {
                double p = std::clamp(sigmoid(F[0][i]), 1e-12, 1.0 - 1e-12);
                loss -= y[i] == 1 ? std::log(p) : std::log(1 - p);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                double mx = F[0][i];
                for (std::size_t s = 1; s < slots; ++s)
                    mx = std::max(mx, F[s][i]);
                double sum = 0;
                for (std::size_t s = 0; s < slots; ++s)
                    sum += std::exp(F[s][i] - mx);
                double logp = F[std::size_t(y[i])][i] - mx - std::log(sum);
                loss -= logp;
            }
        }
        history.push_back(loss / double(n));
    }
    return {std::move(params), std::move(history)};
}

std::vector<double> gbt_scores(const GbtParams& p, const Row& x,
                               std::size_t n_classes) {
    std::size_t slots = p.base.size();
    std::vector<double> F = p.base;
    for (const auto& round : p.rounds)
        for (std::size_t s = 0; s < slots; ++s)
            F[s] += p.shrinkage * round[s].predict(x);
    if (slots == 1 && n_classes == 2) {
        double prob1 = sigmoid(F[0]);
        return {1 - prob1, prob1};
    }
    softmax_inplace(F);
    return F;
}

}  // namespace detail

}  // namespace mhnt::learn
