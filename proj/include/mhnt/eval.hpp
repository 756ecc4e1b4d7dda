#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhnt/models.hpp"

namespace mhnt::eval {

struct SplitResult {
    learn::Dataset train;
    learn::Dataset test;
};

/// Stratified holdout. Per-class test counts follow the global target
/// round(n * test_fraction) by largest-remainder apportionment, clamped so
/// both partitions keep at least one row per class. Deterministic per seed.
/// Throws ValidationError when a class has fewer than 2 samples.
SplitResult split(const learn::Dataset& d, double test_fraction,
                  std::uint64_t seed);

struct PerClass {
    std::string name;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t support = 0;
};

struct Metrics {
    double accuracy = 0;
    double precision = 0;  // support-weighted
    double recall = 0;
    double f1 = 0;
    std::vector<PerClass> per_class;
    std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
};

/// Weighted-average metrics; precision of a never-predicted class is 0.
Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                const std::vector<std::string>& class_names);

struct ModelRow {
    learn::ModelKind kind{};
    Metrics m;
    double train_s = 0;
    double infer_us_per_flow = 0;
    double final_loss = 0;
};

struct EvalReport {
    std::vector<ModelRow> rows;
    learn::Mode mode = learn::Mode::Binary;
    learn::Sampling sampling = learn::Sampling::None;
    std::uint64_t seed = 0;
    std::string dataset_fingerprint;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;

    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
};

/// Trains and scores each model kind on the given split. Training is timed
/// once per model; inference time is the mean of `repeats` full-test-set
/// passes divided by the row count. Requires repeats >= 3.
EvalReport benchmark(const std::vector<learn::ModelKind>& kinds,
                     const learn::Dataset& train, const learn::Dataset& test,
                     const learn::HyperParams& hyper, int repeats,
                     std::uint64_t seed, learn::Sampling sampling);

enum class ReportFormat { Text, Csv, Markdown };

/// Metric values are printed with 4 decimals.
std::string render_report(const EvalReport& r, ReportFormat format);

}  // namespace mhnt::eval
