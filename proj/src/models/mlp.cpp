#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "internal.hpp"

namespace mhnt::learn::detail {

namespace {

double gauss(std::mt19937_64& rng) {
    double u1, u2;
    do {
        u1 = double(rng() >> 11) * 0x1.0p-53;
    } while (u1 <= 0);
    u2 = double(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

struct Forward {
    std::vector<double> z1;  // hidden pre-activation
    std::vector<double> h;   // hidden activation
    std::vector<double> p;   // softmax output
};

Forward forward(const MlpParams& m, const Row& x) {
    Forward f;
    auto H = std::size_t(m.hidden);
    auto I = std::size_t(m.inputs);
    auto O = std::size_t(m.outputs);
    f.z1.resize(H);
    f.h.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
        double z = m.b1[j];
        const double* wrow = &m.w1[j * I];
        for (std::size_t i = 0; i < I; ++i)
            z += wrow[i] * x[i];
        f.z1[j] = z;
        f.h[j] = z > 0 ? z : 0;
    }
    f.p.resize(O);
    for (std::size_t k = 0; k < O; ++k) {
        double z = m.b2[k];
        const double* wrow = &m.w2[k * H];
        for (std::size_t j = 0; j < H; ++j)
            z += wrow[j] * f.h[j];
        f.p[k] = z;
    }
    softmax_inplace(f.p);
    return f;
}

}  // namespace

double mlp_loss(const MlpParams& p, const std::vector<Row>& X,
                const std::vector<int>& y) {
    double loss = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        Forward f = forward(p, X[i]);
        double prob = std::max(f.p[std::size_t(y[i])], 1e-300);
        loss -= std::log(prob);
    }
    return loss / double(X.size());
}

MlpParams mlp_gradient(const MlpParams& p, const std::vector<Row>& X,
                       const std::vector<int>& y,
                       const std::vector<std::uint32_t>& batch) {
    std::vector<std::uint32_t> all;
    const std::vector<std::uint32_t>* rows = &batch;
    if (batch.empty()) {
        all.resize(X.size());
        std::iota(all.begin(), all.end(), 0);
        rows = &all;
    }
    auto H = std::size_t(p.hidden);
    auto I = std::size_t(p.inputs);
    auto O = std::size_t(p.outputs);

    MlpParams g;
    g.inputs = p.inputs;
    g.hidden = p.hidden;
    g.outputs = p.outputs;
    g.w1.assign(p.w1.size(), 0.0);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2.assign(p.w2.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);

    double inv_n = 1.0 / double(rows->size());
    std::vector<double> dz2(O), dh(H);
    for (std::uint32_t r : *rows) {
        const Row& x = X[r];
        Forward f = forward(p, x);
        for (std::size_t k = 0; k < O; ++k)
            dz2[k] = (f.p[k] - (std::size_t(y[r]) == k ? 1.0 : 0.0)) * inv_n;
        for (std::size_t k = 0; k < O; ++k) {
            double* grow = &g.w2[k * H];
            for (std::size_t j = 0; j < H; ++j)
                grow[j] += dz2[k] * f.h[j];
            g.b2[k] += dz2[k];
        }
        for (std::size_t j = 0; j < H; ++j) {
            double acc = 0;
            for (std::size_t k = 0; k < O; ++k)
                acc += p.w2[k * H + j] * dz2[k];
            dh[j] = f.z1[j] > 0 ? acc : 0.0;
        }
        for (std::size_t j = 0; j < H; ++j) {
            if (dh[j] == 0)
                continue;
            double* grow = &g.w1[j * I];
            for (std::size_t i = 0; i < I; ++i)
                grow[i] += dh[j] * x[i];
            g.b1[j] += dh[j];
        }
    }
    return g;
}

std::pair<MlpParams, std::vector<double>> fit_mlp(const std::vector<Row>& Xs,
                                                  const std::vector<int>& y,
                                                  std::size_t n_classes,
                                                  const HyperParams& hyper,
                                                  std::uint64_t seed) {
    std::size_t n = Xs.size();
    std::size_t dims = Xs[0].size();
    MlpParams m;
    m.inputs = std::int32_t(dims);
    m.hidden = hyper.mlp_hidden;
    m.outputs = std::int32_t(n_classes);

    std::mt19937_64 rng(derive_seed(seed, 0x31F));
    double s1 = std::sqrt(2.0 / double(dims));
    double s2 = std::sqrt(1.0 / double(hyper.mlp_hidden));
    m.w1.resize(std::size_t(hyper.mlp_hidden) * dims);
    for (double& w : m.w1)
        w = gauss(rng) * s1;
    m.b1.assign(std::size_t(hyper.mlp_hidden), 0.0);
    m.w2.resize(n_classes * std::size_t(hyper.mlp_hidden));
    for (double& w : m.w2)
        w = gauss(rng) * s2;
    m.b2.assign(n_classes, 0.0);

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> history;
    history.reserve(std::size_t(hyper.mlp_epochs));

    auto batch_size = std::size_t(std::max(1, hyper.mlp_batch));
    for (int epoch = 0; epoch < hyper.mlp_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch_size) {
            std::size_t stop = std::min(n, start + batch_size);
            std::vector<std::uint32_t> batch(order.begin() + std::ptrdiff_t(start),
                                             order.begin() + std::ptrdiff_t(stop));
            MlpParams g = mlp_gradient(m, Xs, y, batch);
            for (std::size_t i = 0; i < m.w1.size(); ++i)
                m.w1[i] -= hyper.mlp_lr * g.w1[i];
            for (std::size_t i = 0; i < m.b1.size(); ++i)
                m.b1[i] -= hyper.mlp_lr * g.b1[i];
            for (std::size_t i = 0; i < m.w2.size(); ++i)
                m.w2[i] -= hyper.mlp_lr * g.w2[i];
            for (std::size_t i = 0; i < m.b2.size(); ++i)
                m.b2[i] -= hyper.mlp_lr * g.b2[i];
        }
        double loss = mlp_loss(m, Xs, y);
        if (!std::isfinite(loss))
            throw Error("mlp training diverged at epoch " + std::to_string(epoch));
        history.push_back(loss);
    }
    return {std::move(m), std::move(history)};
}

std::vector<double> mlp_scores(const MlpParams& p, const Row& x) {
    return forward(p, x).p;
}

}  // namespace mhnt::learn::detail
