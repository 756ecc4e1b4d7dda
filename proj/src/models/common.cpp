#include <algorithm>
#include <cmath>

#include "mhnt/models.hpp"

#include "internal.hpp"

namespace mhnt::learn {

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Dt: return "dt";
        case ModelKind::Rf: return "rf";
        case ModelKind::Svm: return "svm";
        case ModelKind::Nb: return "nb";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Gbt: return "gbt";
    }
    throw ValidationError("bad model kind value");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "dt") return ModelKind::Dt;
    if (name == "rf") return ModelKind::Rf;
    if (name == "svm") return ModelKind::Svm;
    if (name == "nb") return ModelKind::Nb;
    if (name == "mlp") return ModelKind::Mlp;
    if (name == "gbt") return ModelKind::Gbt;
    throw ValidationError("unknown model kind: " + name);
}

namespace detail {

Standardizer Standardizer::fit(const std::vector<Row>& X) {
    Standardizer s;
    if (X.empty())
        throw ValidationError("cannot fit scaler on empty data");
    std::size_t dims = X[0].size();
    s.mean.assign(dims, 0.0);
    s.std.assign(dims, 0.0);
    for (const Row& row : X)
        for (std::size_t f = 0; f < dims; ++f)
            s.mean[f] += row[f];
    for (double& m : s.mean)
        m /= double(X.size());
    for (const Row& row : X)
        for (std::size_t f = 0; f < dims; ++f) {
            double d = row[f] - s.mean[f];
            s.std[f] += d * d;
        }
    for (double& v : s.std) {
        v = std::sqrt(v / double(X.size()));
        if (v == 0.0)
            v = 1.0;
    }
    return s;
}

Row Standardizer::apply(const Row& x) const {
    Row out(x.size());
    for (std::size_t f = 0; f < x.size(); ++f)
        out[f] = (x[f] - mean[f]) / std[f];
    return out;
}

std::vector<Row> Standardizer::apply_all(const std::vector<Row>& X) const {
    std::vector<Row> out;
    out.reserve(X.size());
    for (const Row& x : X)
        out.push_back(apply(x));
    return out;
}

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[std::size_t(best)])
            best = int(i);
    return best;
}

void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double sum = 0;
    for (double& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : v)
        x /= sum;
}

}  // namespace detail

TrainedModel train(ModelKind kind, const Dataset& d, const HyperParams& hyper,
                   std::uint64_t seed) {
    d.validate();
    if (d.size() < 2)
        throw ValidationError("training needs at least 2 samples");
    auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 1)
            throw ValidationError("class " + d.class_names[c] +
                                  " has a single sample; need at least 2");

    TrainedModel m;
    m.kind = kind;
    m.mode = d.mode;
    m.class_names = d.class_names;
    m.train_seed = seed;

    auto scaler = detail::Standardizer::fit(d.X);
    m.scaler_mean = scaler.mean;
    m.scaler_std = scaler.std;
    std::vector<Row> Xs = scaler.apply_all(d.X);

    switch (kind) {
        case ModelKind::Dt:
            m.params = detail::fit_dt(Xs, d.y, d.n_classes(), hyper);
            break;
        case ModelKind::Rf:
            m.params = detail::fit_rf(Xs, d.y, d.n_classes(), hyper, seed);
            break;
        case ModelKind::Svm: {
            auto [p, loss] = detail::fit_svm(Xs, d.y, d.n_classes(), hyper, seed);
            m.params = std::move(p);
            m.final_loss = loss;
            break;
        }
        case ModelKind::Nb:
            m.params = detail::fit_nb(Xs, d.y, d.n_classes(), hyper);
            break;
        case ModelKind::Mlp: {
            auto [p, history] = detail::fit_mlp(Xs, d.y, d.n_classes(), hyper, seed);
            m.params = std::move(p);
            m.loss_history = std::move(history);
            m.final_loss = m.loss_history.back();
            break;
        }
        case ModelKind::Gbt: {
            auto [p, history] = detail::fit_gbt(Xs, d.y, d.n_classes(), hyper);
            m.params = std::move(p);
            m.loss_history = std::move(history);
            m.final_loss = m.loss_history.back();
            break;
        }
    }
    return m;
}

Prediction predict(const TrainedModel& m, const std::vector<Row>& X) {
    for (const Row& row : X)
        if (row.size() != m.scaler_mean.size())
            throw ValidationError("feature count mismatch: model expects " +
                                  std::to_string(m.scaler_mean.size()) + ", got " +
                                  std::to_string(row.size()));
    detail::Standardizer scaler{m.scaler_mean, m.scaler_std};

    Prediction pred;
    pred.labels.reserve(X.size());
    pred.scores.reserve(X.size());
    for (const Row& raw : X) {
        Row x = scaler.apply(raw);
        std::vector<double> scores;
        switch (m.kind) {
            case ModelKind::Dt:
                scores = detail::tree_leaf_probs(std::get<TreeParams>(m.params), x);
                break;
            case ModelKind::Rf:
                scores = detail::rf_scores(std::get<ForestParams>(m.params), x,
                                           m.class_names.size());
                break;
            case ModelKind::Svm:
                scores = detail::svm_scores(std::get<SvmParams>(m.params), x);
                break;
            case ModelKind::Nb:
                scores = detail::nb_scores(std::get<NbParams>(m.params), x);
                break;
            case ModelKind::Mlp:
                scores = detail::mlp_scores(std::get<MlpParams>(m.params), x);
                break;
            case ModelKind::Gbt:
                scores = detail::gbt_scores(std::get<GbtParams>(m.params), x,
                                            m.class_names.size());
                break;
        }
        pred.labels.push_back(detail::argmax_lowest(scores));
        pred.scores.push_back(std::move(scores));
    }
    return pred;
}

}  // namespace mhnt::learn
