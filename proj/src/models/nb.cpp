#include <cmath>
#include <numbers>

#include "internal.hpp"

namespace mhnt::learn::detail {

NbParams fit_nb(const std::vector<Row>& Xs, const std::vector<int>& y,
                std::size_t n_classes, const HyperParams& hyper) {
    std::size_t n = Xs.size();
    std::size_t dims = Xs[0].size();
    NbParams params;
    params.mean.assign(n_classes, std::vector<double>(dims, 0.0));
    params.var.assign(n_classes, std::vector<double>(dims, 0.0));
    params.prior.assign(n_classes, 0.0);

    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto c = std::size_t(y[i]);
        ++counts[c];
        for (std::size_t f = 0; f < dims; ++f)
            params.mean[c][f] += Xs[i][f];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0)
            continue;
        for (double& m : params.mean[c])
            m /= double(counts[c]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto c = std::size_t(y[i]);
        for (std::size_t f = 0; f < dims; ++f) {
            double d = Xs[i][f] - params.mean[c][f];
            params.var[c][f] += d * d;
        }
    }

    // Smoothing floor: a fraction of the largest per-feature variance over
    // the whole training set, so constant features stay harmless.
    std::vector<double> global_mean(dims, 0.0), global_var(dims, 0.0);
    for (const Row& x : Xs)
        for (std::size_t f = 0; f < dims; ++f)
            global_mean[f] += x[f];
    for (double& m : global_mean)
        m /= double(n);
    for (const Row& x : Xs)
        for (std::size_t f = 0; f < dims; ++f) {
            double d = x[f] - global_mean[f];
            global_var[f] += d * d;
        }
    double max_var = 0;
    for (double& v : global_var) {
        v /= double(n);
        max_var = std::max(max_var, v);
    }
    double eps = hyper.nb_smoothing * max_var;
    if (eps == 0)
        eps = hyper.nb_smoothing;

    for (std::size_t c = 0; c < n_classes; ++c) {
        params.prior[c] = double(counts[c]) / double(n);
        for (double& v : params.var[c]) {
            v = counts[c] == 0 ? 1.0 : v / double(counts[c]);
            v += eps;
        }
    }
    return params;
}

std::vector<double> nb_scores(const NbParams& p, const Row& x) {
    std::size_t n_classes = p.prior.size();
    std::vector<double> log_post(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (p.prior[c] == 0) {
            log_post[c] = -1e300;
            continue;
        }
        double lp = std::log(p.prior[c]);
        for (std::size_t f = 0; f < x.size(); ++f) {
            double var = p.var[c][f];
            double d = x[f] - p.mean[c][f];
            lp -= 0.5 * (std::log(2 * std::numbers::pi * var) + d * d / var);
        }
        log_post[c] = lp;
    }
    softmax_inplace(log_post);
    return log_post;
}

}  // namespace mhnt::learn::detail
