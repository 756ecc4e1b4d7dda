#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhnt/flow.hpp"

namespace mhnt::learn {

enum class Mode : std::uint8_t { Binary = 0, Multiclass = 1 };
enum class Sampling : std::uint8_t { None = 0, Under = 1, Over = 2 };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);  // "binary" | "multi"
std::string sampling_name(Sampling s);
Sampling sampling_from_name(const std::string& name);  // "none" | "under" | "over"

using Row = std::vector<double>;

struct Dataset {
    std::vector<Row> X;  // n_samples x kFeatureCount
    std::vector<int> y;
    std::vector<std::string> class_names;
    Mode mode = Mode::Binary;

    std::size_t size() const { return X.size(); }
    std::size_t n_classes() const { return class_names.size(); }
    std::vector<std::size_t> class_counts() const;
    void validate() const;  // throws ValidationError on broken invariants
};

/// Binary mode collapses every attack class to MALICIOUS; multiclass keeps
/// the full class list in AttackClass order. Unlabeled flows are rejected.
Dataset dataset_from_flows(const std::vector<flow::FlowRecord>& flows, Mode mode);

/// Every class present is cut down to the minimum class count, sampling
/// without replacement. Original row order is preserved.
Dataset undersample(const Dataset& d, std::uint64_t seed);

/// Every class present is topped up to the maximum class count by duplicating
/// rows sampled with replacement. Originals keep their order; duplicates
/// append after them.
Dataset oversample(const Dataset& d, std::uint64_t seed);

/// Content hash over mode, class names, features and labels.
std::string dataset_fingerprint(const Dataset& d);

}  // namespace mhnt::learn
