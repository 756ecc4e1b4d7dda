#include "mhnt/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace mhnt::eval {

using learn::Dataset;

SplitResult split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    d.validate();
    if (!(test_fraction > 0 && test_fraction < 1))
        throw ValidationError("test fraction must lie in (0,1)");

    std::vector<std::vector<std::size_t>> by_class(d.n_classes());
    for (std::size_t i = 0; i < d.y.size(); ++i)
        by_class[std::size_t(d.y[i])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() == 1)
            throw ValidationError("stratified split needs >= 2 samples of class " +
                                  d.class_names[c]);

    // Largest-remainder apportionment of the global test target.
    auto target = std::size_t(std::lround(double(d.size()) * test_fraction));
    target = std::clamp(target, std::size_t(1), d.size() - 1);
    std::vector<std::size_t> quota(by_class.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].empty())
            continue;
        double exact = double(by_class[c].size()) * double(target) / double(d.size());
        quota[c] = std::size_t(exact);
        assigned += quota[c];
        remainders.push_back({exact - double(quota[c]), c});
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                  if (a.first != b.first)
                      return a.first > b.first;
                  return a.second < b.second;
              });
    for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k) {
        ++quota[remainders[k].second];
        ++assigned;
    }
    for (std::size_t c = 0; c < by_class.size(); ++c)
        if (!by_class[c].empty())
            quota[c] = std::clamp(quota[c], std::size_t(1), by_class[c].size() - 1);

    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto idx = by_class[c];
        if (idx.empty())
            continue;
        std::mt19937_64 rng(derive_seed(seed, 0x517A + c));
        std::shuffle(idx.begin(), idx.end(), rng);
        test_rows.insert(test_rows.end(), idx.begin(),
                         idx.begin() + std::ptrdiff_t(quota[c]));
        train_rows.insert(train_rows.end(), idx.begin() + std::ptrdiff_t(quota[c]),
                          idx.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());

    auto take = [&](const std::vector<std::size_t>& rows) {
        Dataset out;
        out.mode = d.mode;
        out.class_names = d.class_names;
        for (std::size_t i : rows) {
            out.X.push_back(d.X[i]);
            out.y.push_back(d.y[i]);
        }
        return out;
    };
    return {take(train_rows), take(test_rows)};
}

Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                const std::vector<std::string>& class_names) {
    if (y_true.size() != y_pred.size())
        throw ValidationError("metrics: label vectors differ in length");
    if (y_true.empty())
        throw ValidationError("metrics: empty label vectors");
    std::size_t C = class_names.size();
    for (int v : y_true)
        if (v < 0 || std::size_t(v) >= C)
            throw ValidationError("metrics: true label out of range");
    for (int v : y_pred)
        if (v < 0 || std::size_t(v) >= C)
            throw ValidationError("metrics: predicted label out of range");

    Metrics m;
    m.confusion.assign(C, std::vector<std::size_t>(C, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i)
        ++m.confusion[std::size_t(y_true[i])][std::size_t(y_pred[i])];

    std::size_t n = y_true.size();
    std::size_t correct = 0;
    for (std::size_t c = 0; c < C; ++c)
        correct += m.confusion[c][c];
    m.accuracy = double(correct) / double(n);

    for (std::size_t c = 0; c < C; ++c) {
        PerClass pc;
        pc.name = class_names[c];
        std::size_t tp = m.confusion[c][c];
        std::size_t support = 0, predicted = 0;
        for (std::size_t k = 0; k < C; ++k) {
            support += m.confusion[c][k];
            predicted += m.confusion[k][c];
        }
        pc.support = support;
        pc.precision = predicted == 0 ? 0.0 : double(tp) / double(predicted);
        pc.recall = support == 0 ? 0.0 : double(tp) / double(support);
        pc.f1 = pc.precision + pc.recall == 0
                    ? 0.0
                    : 2 * pc.precision * pc.recall / (pc.precision + pc.recall);
        m.precision += double(support) * pc.precision;
        m.recall += double(support) * pc.recall;
        m.f1 += double(support) * pc.f1;
        m.per_class.push_back(std::move(pc));
    }
    m.precision /= double(n);
    m.recall /= double(n);
    m.f1 /= double(n);
    return m;
}

EvalReport benchmark(const std::vector<learn::ModelKind>& kinds,
                     const Dataset& train, const Dataset& test,
                     const learn::HyperParams& hyper, int repeats,
                     std::uint64_t seed, learn::Sampling sampling) {
    if (repeats < 3)
        throw ValidationError("benchmark needs repeats >= 3");
    if (train.mode != test.mode || train.class_names != test.class_names)
        throw ValidationError("benchmark: train/test schema mismatch");

    EvalReport report;
    report.mode = train.mode;
    report.sampling = sampling;
    report.seed = seed;
    report.train_rows = train.size();
    report.test_rows = test.size();
    {
        Dataset merged = train;
        merged.X.insert(merged.X.end(), test.X.begin(), test.X.end());
        merged.y.insert(merged.y.end(), test.y.begin(), test.y.end());
        report.dataset_fingerprint = learn::dataset_fingerprint(merged);
    }

    using clock = std::chrono::steady_clock;
    for (learn::ModelKind kind : kinds) {
        ModelRow row;
        row.kind = kind;

        auto t0 = clock::now();
        learn::TrainedModel model = learn::train(kind, train, hyper, seed);
        auto t1 = clock::now();
        row.train_s = std::chrono::duration<double>(t1 - t0).count();
        row.final_loss = model.final_loss;

        learn::Prediction pred;
        double total_s = 0;
        for (int rep = 0; rep < repeats; ++rep) {
            auto p0 = clock::now();
            pred = learn::predict(model, test.X);
            auto p1 = clock::now();
            total_s += std::chrono::duration<double>(p1 - p0).count();
        }
        row.infer_us_per_flow =
            total_s / double(repeats) / double(test.size()) * 1e6;
        row.m = metrics(test.y, pred.labels, test.class_names);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string render_report(const EvalReport& r, ReportFormat format) {
    std::string mode = learn::mode_name(r.mode);
    std::string sampling = learn::sampling_name(r.sampling);
    std::ostringstream out;

    switch (format) {
        case ReportFormat::Csv: {
            out << "model,mode,sampling,accuracy,precision,recall,f1,"
                   "train_s,infer_us_per_flow,seed\n";
            for (const ModelRow& row : r.rows)
                out << learn::model_kind_name(row.kind) << ',' << mode << ','
                    << sampling << ',' << fixed4(row.m.accuracy) << ','
                    << fixed4(row.m.precision) << ',' << fixed4(row.m.recall)
                    << ',' << fixed4(row.m.f1) << ',' << fixed4(row.train_s)
                    << ',' << fixed4(row.infer_us_per_flow) << ',' << r.seed
                    << '\n';
            break;
        }
        case ReportFormat::Markdown: {
            out << "| model | mode | sampling | accuracy | precision | recall | "
                   "f1 | train_s | infer_us_per_flow |\n";
            out << "|---|---|---|---|---|---|---|---|---|\n";
            for (const ModelRow& row : r.rows)
                out << "| " << learn::model_kind_name(row.kind) << " | " << mode
                    << " | " << sampling << " | " << fixed4(row.m.accuracy)
                    << " | " << fixed4(row.m.precision) << " | "
                    << fixed4(row.m.recall) << " | " << fixed4(row.m.f1) << " | "
                    << fixed4(row.train_s) << " | "
                    << fixed4(row.infer_us_per_flow) << " |\n";
            break;
        }
        case ReportFormat::Text: {
            out << "mode=" << mode << " sampling=" << sampling
                << " seed=" << r.seed << " train_rows=" << r.train_rows
                << " test_rows=" << r.test_rows << "\n";
            out << "dataset_fingerprint=" << r.dataset_fingerprint << "\n";
            out << "model  accuracy  precision  recall  f1      train_s   "
                   "infer_us\n";
            for (const ModelRow& row : r.rows) {
                char line[160];
                std::snprintf(line, sizeof line,
                              "%-5s  %.4f    %.4f     %.4f  %.4f  %8.4f  %8.4f\n",
                              learn::model_kind_name(row.kind).c_str(),
                              row.m.accuracy, row.m.precision, row.m.recall,
                              row.m.f1, row.train_s, row.infer_us_per_flow);
                out << line;
            }
            break;
        }
    }
    return out.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["mode"] = learn::mode_name(mode);
    j["sampling"] = learn::sampling_name(sampling);
    j["seed"] = seed;
    j["dataset_fingerprint"] = dataset_fingerprint;
    j["train_rows"] = train_rows;
    j["test_rows"] = test_rows;
    j["rows"] = nlohmann::json::array();
    for (const ModelRow& row : rows) {
        nlohmann::json rj;
        rj["model"] = learn::model_kind_name(row.kind);
        rj["accuracy"] = row.m.accuracy;
        rj["precision"] = row.m.precision;
        rj["recall"] = row.m.recall;
        rj["f1"] = row.m.f1;
        rj["train_s"] = row.train_s;
        rj["infer_us_per_flow"] = row.infer_us_per_flow;
        rj["final_loss"] = row.final_loss;
        rj["per_class"] = nlohmann::json::array();
        for (const PerClass& pc : row.m.per_class)
            rj["per_class"].push_back({{"name", pc.name},
                                       {"precision", pc.precision},
                                       {"recall", pc.recall},
                                       {"f1", pc.f1},
                                       {"support", pc.support}});
        rj["confusion"] = row.m.confusion;
        j["rows"].push_back(rj);
    }
    return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    EvalReport r;
    try {
        r.mode = learn::mode_from_name(j.at("mode").get<std::string>());
        r.sampling = learn::sampling_from_name(j.at("sampling").get<std::string>());
        r.seed = j.at("seed").get<std::uint64_t>();
        r.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        r.train_rows = j.at("train_rows").get<std::size_t>();
        r.test_rows = j.at("test_rows").get<std::size_t>();
        for (const auto& rj : j.at("rows")) {
            ModelRow row;
            row.kind = learn::model_kind_from_name(rj.at("model").get<std::string>());
            row.m.accuracy = rj.at("accuracy").get<double>();
            row.m.precision = rj.at("precision").get<double>();
            row.m.recall = rj.at("recall").get<double>();
            row.m.f1 = rj.at("f1").get<double>();
            row.train_s = rj.at("train_s").get<double>();
            row.infer_us_per_flow = rj.at("infer_us_per_flow").get<double>();
            row.final_loss = rj.at("final_loss").get<double>();
            for (const auto& pj : rj.at("per_class")) {
                PerClass pc;
                pc.name = pj.at("name").get<std::string>();
                pc.precision = pj.at("precision").get<double>();
                pc.recall = pj.at("recall").get<double>();
                pc.f1 = pj.at("f1").get<double>();
                pc.support = pj.at("support").get<std::size_t>();
                row.m.per_class.push_back(std::move(pc));
            }
            row.m.confusion =
                rj.at("confusion").get<std::vector<std::vector<std::size_t>>>();
            r.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report field error: ") + e.what());
    }
    return r;
}

}  // namespace mhnt::eval
