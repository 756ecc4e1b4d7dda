#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mhnt/eval.hpp"

using namespace mhnt;
using namespace mhnt::eval;
using learn::Dataset;
using learn::Mode;
using learn::ModelKind;
using learn::Row;

namespace {

constexpr std::size_t kDims = flow::kFeatureCount;

// Rows tagged with their original index on feature 23 so split membership
// can be traced back.
Dataset tagged(const std::vector<std::size_t>& counts) {
    Dataset d;
    d.mode = Mode::Multiclass;
    for (std::size_t c = 0; c < counts.size(); ++c)
        d.class_names.push_back("C" + std::to_string(c));
    std::size_t tag = 0;
    for (std::size_t c = 0; c < counts.size(); ++c)
        for (std::size_t i = 0; i < counts[c]; ++i) {
            Row r(kDims, 0.0);
            r[0] = double(c);
            r[23] = double(tag++);
            d.X.push_back(std::move(r));
            d.y.push_back(int(c));
        }
    return d;
}

Dataset binary_blobs(std::size_t per_class, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.7);
    Dataset d;
    d.mode = Mode::Binary;
    d.class_names = {"BENIGN", "MALICIOUS"};
    for (int c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            Row r(kDims, 0.0);
            r[0] = (c ? 3.0 : 0.0) + noise(rng);
            r[1] = (c ? -2.0 : 2.0) + noise(rng);
            d.X.push_back(std::move(r));
            d.y.push_back(c);
        }
    return d;
}

std::vector<std::size_t> tags_of(const Dataset& d) {
    std::vector<std::size_t> t;
    for (const Row& r : d.X)
        t.push_back(std::size_t(r[23]));
    return t;
}

// Independent reimplementation with the same accumulation order, so the
// comparison can demand bit equality.
Metrics metrics_oracle(const std::vector<int>& y_true,
                       const std::vector<int>& y_pred,
                       const std::vector<std::string>& names) {
    std::size_t C = names.size();
    std::size_t n = y_true.size();
    Metrics m;
    m.confusion.assign(C, std::vector<std::size_t>(C, 0));
    for (std::size_t i = 0; i < n; ++i)
        ++m.confusion[std::size_t(y_true[i])][std::size_t(y_pred[i])];
    std::size_t correct = 0;
    for (std::size_t c = 0; c < C; ++c)
        correct += m.confusion[c][c];
    m.accuracy = double(correct) / double(n);
    for (std::size_t c = 0; c < C; ++c) {
        PerClass pc;
        pc.name = names[c];
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

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos)
            pos = text.size();
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("the worked metrics example comes out exactly") {
    Metrics m = metrics({0, 0, 1, 1}, {0, 1, 1, 1}, {"A", "B"});
    CHECK(m.accuracy == 0.75);
    CHECK(m.precision == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(m.recall == 0.75);
    CHECK(m.f1 == doctest::Approx(11.0 / 15.0).epsilon(1e-12));

    REQUIRE(m.per_class.size() == 2);
    CHECK(m.per_class[0].name == "A");
    CHECK(m.per_class[0].precision == 1.0);
    CHECK(m.per_class[0].recall == 0.5);
    CHECK(m.per_class[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.per_class[0].support == 2);
    CHECK(m.per_class[1].precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.per_class[1].recall == 1.0);
    CHECK(m.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-12));

    REQUIRE(m.confusion.size() == 2);
    CHECK(m.confusion[0] == std::vector<std::size_t>{1, 1});
    CHECK(m.confusion[1] == std::vector<std::size_t>{0, 2});
}

TEST_CASE("metrics agree with a brute-force oracle on random label vectors") {
    std::mt19937_64 rng(20260825);
    for (int rep = 0; rep < 1000; ++rep) {
        std::size_t C = 2 + rng() % 4;
        std::size_t n = 1 + rng() % 40;
        std::vector<std::string> names;
        for (std::size_t c = 0; c < C; ++c)
            names.push_back("K" + std::to_string(c));
        std::vector<int> y_true(n), y_pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            y_true[i] = int(rng() % C);
            y_pred[i] = int(rng() % C);
        }

        Metrics want = metrics_oracle(y_true, y_pred, names);
        Metrics got = metrics(y_true, y_pred, names);

        REQUIRE(got.accuracy == want.accuracy);
        REQUIRE(got.precision == want.precision);
        REQUIRE(got.recall == want.recall);
        REQUIRE(got.f1 == want.f1);
        REQUIRE(got.confusion == want.confusion);
        REQUIRE(got.per_class.size() == want.per_class.size());
        for (std::size_t c = 0; c < C; ++c) {
            REQUIRE(got.per_class[c].name == want.per_class[c].name);
            REQUIRE(got.per_class[c].precision == want.per_class[c].precision);
            REQUIRE(got.per_class[c].recall == want.per_class[c].recall);
            REQUIRE(got.per_class[c].f1 == want.per_class[c].f1);
            REQUIRE(got.per_class[c].support == want.per_class[c].support);
        }
    }
}

TEST_CASE("perfect predictions score one across the board") {
    Metrics m = metrics({0, 1, 2, 0, 2}, {0, 1, 2, 0, 2}, {"A", "B", "C"});
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
}

TEST_CASE("a never-predicted class gets zero precision") {
    Metrics m = metrics({0, 1}, {0, 0}, {"A", "B"});
    CHECK(m.per_class[1].precision == 0.0);
    CHECK(m.per_class[1].recall == 0.0);
    CHECK(m.per_class[1].f1 == 0.0);
    CHECK(m.per_class[1].support == 1);
    CHECK(m.accuracy == 0.5);
}

TEST_CASE("metrics validate their inputs") {
    std::vector<std::string> names = {"A", "B"};
    CHECK_THROWS_WITH_AS(metrics({0, 1}, {0}, names),
                         "metrics: label vectors differ in length",
                         ValidationError);
    CHECK_THROWS_WITH_AS(metrics({}, {}, names), "metrics: empty label vectors",
                         ValidationError);
    CHECK_THROWS_WITH_AS(metrics({0, 2}, {0, 1}, names),
                         "metrics: true label out of range", ValidationError);
    CHECK_THROWS_WITH_AS(metrics({0, 1}, {0, -1}, names),
                         "metrics: predicted label out of range",
                         ValidationError);
}

TEST_CASE("a proportional split lands exactly on the per-class quotas") {
    Dataset d = tagged({40, 30, 20, 10});
    SplitResult s = split(d, 0.2, 7);
    s.train.validate();
    s.test.validate();

    CHECK(s.test.size() == 20);
    CHECK(s.train.size() == 80);
    CHECK(s.test.class_counts() == std::vector<std::size_t>{8, 6, 4, 2});
    CHECK(s.train.class_counts() == std::vector<std::size_t>{32, 24, 16, 8});
    CHECK(s.train.mode == d.mode);
    CHECK(s.test.class_names == d.class_names);

    auto train_tags = tags_of(s.train);
    auto test_tags = tags_of(s.test);
    CHECK(std::is_sorted(train_tags.begin(), train_tags.end()));
    CHECK(std::is_sorted(test_tags.begin(), test_tags.end()));

    std::set<std::size_t> all(train_tags.begin(), train_tags.end());
    for (std::size_t t : test_tags) {
        CHECK(all.count(t) == 0);  // disjoint
        all.insert(t);
    }
    CHECK(all.size() == d.size());

    for (std::size_t i = 0; i < s.test.size(); ++i) {
        std::size_t t = test_tags[i];
        CHECK(s.test.X[i] == d.X[t]);
        CHECK(s.test.y[i] == d.y[t]);
    }
}

TEST_CASE("fractional quotas fall to the largest remainder, ties to the lowest class") {
    Dataset d = tagged({7, 3});
    SplitResult s = split(d, 0.5, 3);
    // Exact shares 3.5 and 1.5 tie on the remainder; class 0 takes the
    // leftover test slot.
    CHECK(s.test.class_counts() == std::vector<std::size_t>{4, 1});
    CHECK(s.train.class_counts() == std::vector<std::size_t>{3, 2});
}

TEST_CASE("quota clamping keeps every class on both sides") {
    Dataset d = tagged({2, 8});
    SplitResult s = split(d, 0.9, 1);
    CHECK(s.test.class_counts() == std::vector<std::size_t>{1, 7});
    CHECK(s.train.class_counts() == std::vector<std::size_t>{1, 1});

    Dataset e = tagged({5, 5});
    SplitResult t = split(e, 0.01, 1);
    CHECK(t.test.class_counts() == std::vector<std::size_t>{1, 1});
    CHECK(t.train.class_counts() == std::vector<std::size_t>{4, 4});
}

TEST_CASE("splits are deterministic per seed") {
    Dataset d = tagged({30, 20, 10});
    SplitResult a = split(d, 0.25, 11);
    SplitResult b = split(d, 0.25, 11);
    CHECK(a.train.X == b.train.X);
    CHECK(a.train.y == b.train.y);
    CHECK(a.test.X == b.test.X);
    CHECK(a.test.y == b.test.y);

    SplitResult c = split(d, 0.25, 12);
    CHECK(c.test.class_counts() == a.test.class_counts());
    CHECK(tags_of(c.test) != tags_of(a.test));
}

TEST_CASE("splitting skips classes that are absent") {
    Dataset d = tagged({10, 0, 10});
    SplitResult s = split(d, 0.3, 2);
    CHECK(s.test.class_counts() == std::vector<std::size_t>{3, 0, 3});
    CHECK(s.train.class_counts() == std::vector<std::size_t>{7, 0, 7});
}

TEST_CASE("split validates fraction and class support") {
    Dataset d = tagged({4, 1});
    CHECK_THROWS_WITH_AS(split(d, 0.5, 1),
                         "stratified split needs >= 2 samples of class C1",
                         ValidationError);

    Dataset ok = tagged({4, 4});
    for (double f : {0.0, 1.0, -0.5, 1.5})
        CHECK_THROWS_WITH_AS(split(ok, f, 1),
                             "test fraction must lie in (0,1)", ValidationError);
}

TEST_CASE("benchmark measures every requested model") {
    Dataset d = binary_blobs(30, 4);
    SplitResult s = split(d, 0.25, 9);
    learn::HyperParams h;
    h.rf_trees = 10;
    std::vector<ModelKind> kinds = {ModelKind::Dt, ModelKind::Nb,
                                    ModelKind::Rf};

    EvalReport r = benchmark(kinds, s.train, s.test, h, 3, 9,
                             learn::Sampling::None);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.mode == Mode::Binary);
    CHECK(r.sampling == learn::Sampling::None);
    CHECK(r.seed == 9);
    CHECK(r.train_rows == s.train.size());
    CHECK(r.test_rows == s.test.size());

    Dataset merged = s.train;
    merged.X.insert(merged.X.end(), s.test.X.begin(), s.test.X.end());
    merged.y.insert(merged.y.end(), s.test.y.begin(), s.test.y.end());
    CHECK(r.dataset_fingerprint == learn::dataset_fingerprint(merged));

    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const ModelRow& row = r.rows[i];
        CHECK(row.kind == kinds[i]);
        CHECK(std::isfinite(row.train_s));
        CHECK(row.train_s >= 0.0);
        CHECK(std::isfinite(row.infer_us_per_flow));
        CHECK(row.infer_us_per_flow >= 0.0);
        CHECK(row.m.accuracy >= 0.9);  // blobs are easy
        CHECK(row.m.accuracy <= 1.0);
        CHECK(row.m.per_class.size() == 2);
        std::size_t support = 0;
        for (const PerClass& pc : row.m.per_class)
            support += pc.support;
        CHECK(support == s.test.size());
    }
}

TEST_CASE("benchmark rejects bad setups") {
    Dataset d = binary_blobs(10, 5);
    SplitResult s = split(d, 0.3, 1);
    learn::HyperParams h;
    CHECK_THROWS_WITH_AS(benchmark({ModelKind::Dt}, s.train, s.test, h, 2, 1,
                                   learn::Sampling::None),
                         "benchmark needs repeats >= 3", ValidationError);

    Dataset other = s.test;
    other.class_names = {"BENIGN", "EVIL"};
    other.mode = Mode::Multiclass;
    CHECK_THROWS_WITH_AS(benchmark({ModelKind::Dt}, s.train, other, h, 3, 1,
                                   learn::Sampling::None),
                         "benchmark: train/test schema mismatch",
                         ValidationError);
}

TEST_CASE("evaluation reports survive a json round trip") {
    Dataset d = binary_blobs(15, 6);
    SplitResult s = split(d, 0.3, 2);
    learn::HyperParams h;
    EvalReport r = benchmark({ModelKind::Dt, ModelKind::Nb}, s.train, s.test, h,
                             3, 2, learn::Sampling::Under);

    std::string text = r.to_json();
    EvalReport back = EvalReport::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.mode == r.mode);
    CHECK(back.sampling == r.sampling);
    CHECK(back.seed == r.seed);
    CHECK(back.dataset_fingerprint == r.dataset_fingerprint);
    CHECK(back.train_rows == r.train_rows);
    CHECK(back.test_rows == r.test_rows);
    REQUIRE(back.rows.size() == r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(back.rows[i].kind == r.rows[i].kind);
        CHECK(back.rows[i].m.accuracy == r.rows[i].m.accuracy);
        CHECK(back.rows[i].m.f1 == r.rows[i].m.f1);
        CHECK(back.rows[i].train_s == r.rows[i].train_s);
        CHECK(back.rows[i].infer_us_per_flow == r.rows[i].infer_us_per_flow);
        CHECK(back.rows[i].final_loss == r.rows[i].final_loss);
        CHECK(back.rows[i].m.confusion == r.rows[i].m.confusion);
        REQUIRE(back.rows[i].m.per_class.size() ==
                r.rows[i].m.per_class.size());
        for (std::size_t c = 0; c < r.rows[i].m.per_class.size(); ++c) {
            CHECK(back.rows[i].m.per_class[c].name ==
                  r.rows[i].m.per_class[c].name);
            CHECK(back.rows[i].m.per_class[c].f1 ==
                  r.rows[i].m.per_class[c].f1);
            CHECK(back.rows[i].m.per_class[c].support ==
                  r.rows[i].m.per_class[c].support);
        }
    }

    CHECK_THROWS_WITH_AS(EvalReport::from_json("{nope"),
                         doctest::Contains("report is not valid JSON"),
                         FormatError);
    CHECK_THROWS_WITH_AS(EvalReport::from_json("{\"mode\": \"binary\"}"),
                         doctest::Contains("report field error"), FormatError);
}

TEST_CASE("rendered reports carry four-decimal metrics") {
    Dataset d = binary_blobs(15, 8);
    SplitResult s = split(d, 0.3, 4);
    learn::HyperParams h;
    EvalReport r = benchmark({ModelKind::Dt, ModelKind::Nb}, s.train, s.test, h,
                             3, 4, learn::Sampling::None);

    std::string csv = render_report(r, ReportFormat::Csv);
    auto csv_lines = lines_of(csv);
    REQUIRE(csv_lines.size() == 3);
    CHECK(csv_lines[0] ==
          "model,mode,sampling,accuracy,precision,recall,f1,"
          "train_s,infer_us_per_flow,seed");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        auto fields = split_csv(csv_lines[i + 1]);
        REQUIRE(fields.size() == 10);
        CHECK(fields[0] == learn::model_kind_name(r.rows[i].kind));
        CHECK(fields[1] == "binary");
        CHECK(fields[2] == "none");
        CHECK(fields[3] == fixed4(r.rows[i].m.accuracy));
        CHECK(fields[4] == fixed4(r.rows[i].m.precision));
        CHECK(fields[5] == fixed4(r.rows[i].m.recall));
        CHECK(fields[6] == fixed4(r.rows[i].m.f1));
        CHECK(fields[7] == fixed4(r.rows[i].train_s));
        CHECK(fields[8] == fixed4(r.rows[i].infer_us_per_flow));
        CHECK(fields[9] == std::to_string(r.seed));
    }

    std::string md = render_report(r, ReportFormat::Markdown);
    auto md_lines = lines_of(md);
    REQUIRE(md_lines.size() == 2 + r.rows.size());
    CHECK(md_lines[0].substr(0, 9) == "| model |");
    CHECK(md_lines[1] == "|---|---|---|---|---|---|---|---|---|");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(md_lines[2 + i].find("| " +
                                   learn::model_kind_name(r.rows[i].kind) +
                                   " |") != std::string::npos);
        CHECK(md_lines[2 + i].find(fixed4(r.rows[i].m.f1)) !=
              std::string::npos);
    }

    std::string text = render_report(r, ReportFormat::Text);
    auto text_lines = lines_of(text);
    REQUIRE(text_lines.size() == 3 + r.rows.size());
    CHECK(text_lines[0].find("mode=binary") != std::string::npos);
    CHECK(text_lines[0].find("seed=4") != std::string::npos);
    CHECK(text_lines[1] == "dataset_fingerprint=" + r.dataset_fingerprint);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const std::string& line = text_lines[3 + i];
        CHECK(line.substr(0, learn::model_kind_name(r.rows[i].kind).size()) ==
              learn::model_kind_name(r.rows[i].kind));
        CHECK(line.find(fixed4(r.rows[i].m.accuracy)) != std::string::npos);
    }
}
