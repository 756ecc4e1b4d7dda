#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace mhnt::learn::detail {

// Pegasos-style subgradient descent on L2-regularized hinge loss, one
// binary classifier per class (one-vs-rest). The bias is unregularized.
std::pair<SvmParams, double> fit_svm(const std::vector<Row>& Xs,
                                     const std::vector<int>& y,
                                     std::size_t n_classes,
                                     const HyperParams& hyper,
                                     std::uint64_t seed) {
    std::size_t n = Xs.size();
    std::size_t dims = Xs[0].size();
    SvmParams params;
    params.weights.assign(n_classes, std::vector<double>(dims, 0.0));
    params.bias.assign(n_classes, 0.0);
    double total_loss = 0;

    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<double>& w = params.weights[c];
        double& b = params.bias[c];
        std::mt19937_64 rng(derive_seed(seed, 0x5F00 + c));
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0);

        std::uint64_t t = 0;
        for (int epoch = 0; epoch < hyper.svm_epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::uint32_t i : order) {
                ++t;
                double eta = 1.0 / (hyper.svm_lambda * double(t));
                double target = y[i] == int(c) ? 1.0 : -1.0;
                const Row& x = Xs[i];
                double margin = b;
                for (std::size_t f = 0; f < dims; ++f)
                    margin += w[f] * x[f];
                margin *= target;
                double shrink = 1.0 - eta * hyper.svm_lambda;
                if (margin < 1.0) {
                    for (std::size_t f = 0; f < dims; ++f)
                        w[f] = shrink * w[f] + eta * target * x[f];
                    b += eta * target;
                } else {
                    for (double& wf : w)
                        wf *= shrink;
                }
            }
        }

        double hinge = 0, norm2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double target = y[i] == int(c) ? 1.0 : -1.0;
            double decision = b;
            for (std::size_t f = 0; f < dims; ++f)
                decision += w[f] * Xs[i][f];
            hinge += std::max(0.0, 1.0 - target * decision);
        }
        for (double wf : w)
            norm2 += wf * wf;
        total_loss += hinge / double(n) + hyper.svm_lambda / 2 * norm2;
    }

    return {std::move(params), total_loss / double(n_classes)};
}

std::vector<double> svm_scores(const SvmParams& p, const Row& x) {
    std::vector<double> decisions(p.weights.size(), 0.0);
    for (std::size_t c = 0; c < p.weights.size(); ++c) {
        double d = p.bias[c];
        const std::vector<double>& w = p.weights[c];
        for (std::size_t f = 0; f < w.size(); ++f)
            d += w[f] * x[f];
        decisions[c] = d;
    }
    // Softmax keeps the argmax of the raw decisions and yields rows
    // comparable with the probabilistic models.
    softmax_inplace(decisions);
    return decisions;
}

}  // namespace mhnt::learn::detail
