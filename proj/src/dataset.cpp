#include "mhnt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mhnt/hash.hpp"

namespace mhnt::learn {

std::string mode_name(Mode m) {
    return m == Mode::Binary ? "binary" : "multi";
}

Mode mode_from_name(const std::string& name) {
    if (name == "binary")
        return Mode::Binary;
    if (name == "multi" || name == "multiclass")
        return Mode::Multiclass;
    throw ValidationError("unknown mode: " + name);
}

std::string sampling_name(Sampling s) {
    switch (s) {
        case Sampling::None: return "none";
        case Sampling::Under: return "under";
        case Sampling::Over: return "over";
    }
    throw ValidationError("bad sampling value");
}

Sampling sampling_from_name(const std::string& name) {
    if (name == "none")
        return Sampling::None;
    if (name == "under")
        return Sampling::Under;
    if (name == "over")
        return Sampling::Over;
    throw ValidationError("unknown sampling: " + name);
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (int label : y)
        ++counts[std::size_t(label)];
    return counts;
}

void Dataset::validate() const {
    if (X.size() != y.size())
        throw ValidationError("dataset row/label count mismatch");
    if (class_names.empty())
        throw ValidationError("dataset has no classes");
    if (mode == Mode::Binary &&
        (class_names.size() != 2 || class_names[0] != "BENIGN" ||
         class_names[1] != "MALICIOUS"))
        throw ValidationError("binary dataset must have classes {BENIGN, MALICIOUS}");
    for (int label : y)
        if (label < 0 || std::size_t(label) >= class_names.size())
            throw ValidationError("label id out of range");
    for (const Row& row : X) {
        if (row.size() != flow::kFeatureCount)
            throw ValidationError("feature row width != 24");
        for (double v : row)
            if (!std::isfinite(v))
                throw ValidationError("non-finite feature value");
    }
}

Dataset dataset_from_flows(const std::vector<flow::FlowRecord>& flows, Mode mode) {
    Dataset d;
    d.mode = mode;
    if (mode == Mode::Binary) {
        d.class_names = {"BENIGN", "MALICIOUS"};
    } else {
        for (std::size_t c = 0; c < flow::kAttackClassCount; ++c)
            d.class_names.push_back(
                flow::attack_class_name(flow::AttackClass(c)));
    }
    d.X.reserve(flows.size());
    d.y.reserve(flows.size());
    for (const flow::FlowRecord& f : flows) {
        if (!f.label)
            throw ValidationError("cannot build a dataset from unlabeled flows");
        auto a = f.features.to_array();
        d.X.emplace_back(a.begin(), a.end());
        if (mode == Mode::Binary)
            d.y.push_back(*f.label == flow::AttackClass::Benign ? 0 : 1);
        else
            d.y.push_back(int(*f.label));
    }
    d.validate();
    return d;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& d) {
    std::vector<std::vector<std::size_t>> by_class(d.n_classes());
    for (std::size_t i = 0; i < d.y.size(); ++i)
        by_class[std::size_t(d.y[i])].push_back(i);
    return by_class;
}

Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.mode = d.mode;
    out.class_names = d.class_names;
    out.X.reserve(rows.size());
    out.y.reserve(rows.size());
    for (std::size_t i : rows) {
        out.X.push_back(d.X[i]);
        out.y.push_back(d.y[i]);
    }
    return out;
}

}  // namespace

Dataset undersample(const Dataset& d, std::uint64_t seed) {
    d.validate();
    if (d.size() == 0)
        throw ValidationError("cannot resample an empty dataset");
    auto by_class = indices_by_class(d);
    std::size_t min_count = SIZE_MAX;
    for (const auto& idx : by_class)
        if (!idx.empty())
            min_count = std::min(min_count, idx.size());

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto idx = by_class[c];
        if (idx.empty())
            continue;
        std::mt19937_64 rng(derive_seed(seed, 0xD5A0 + c));
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(min_count);
        keep.insert(keep.end(), idx.begin(), idx.end());
    }
    std::sort(keep.begin(), keep.end());
    return take_rows(d, keep);
}

Dataset oversample(const Dataset& d, std::uint64_t seed) {
    d.validate();
    if (d.size() == 0)
        throw ValidationError("cannot resample an empty dataset");
    auto by_class = indices_by_class(d);
    std::size_t max_count = 0;
    for (const auto& idx : by_class)
        max_count = std::max(max_count, idx.size());

    std::vector<std::size_t> rows(d.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = i;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto& idx = by_class[c];
        if (idx.empty())
            continue;
        std::mt19937_64 rng(derive_seed(seed, 0x0E50 + c));
        for (std::size_t k = idx.size(); k < max_count; ++k)
            rows.push_back(idx[rng() % idx.size()]);
    }
    return take_rows(d, rows);
}

std::string dataset_fingerprint(const Dataset& d) {
    std::string buf;
    buf += mode_name(d.mode);
    buf += '\n';
    for (const auto& name : d.class_names) {
        buf += name;
        buf += ',';
    }
    buf += '\n';
    for (std::size_t i = 0; i < d.X.size(); ++i) {
        for (double v : d.X[i]) {
            buf += format_double(v);
            buf += ',';
        }
        buf += std::to_string(d.y[i]);
        buf += '\n';
    }
    return digest_hex(sha256(buf));
}

}  // namespace mhnt::learn
