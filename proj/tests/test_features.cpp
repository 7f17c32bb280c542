#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diabrisk/common.hpp"
#include "diabrisk/features.hpp"
#include "diabrisk/rng.hpp"

using namespace diabrisk;

namespace {

TaggedSentence sent(std::vector<std::string> tokens) {
    std::vector<std::string> tags(tokens.size(), "O");
    return {"p", std::move(tokens), std::move(tags)};
}

FusedSchema tiny_schema(std::size_t bow, std::size_t ent, std::size_t str) {
    FusedSchema s;
    for (std::size_t i = 0; i < bow; ++i) s.bow_names.push_back("w" + std::to_string(i));
    for (std::size_t i = 0; i < ent; ++i) s.entity_kinds.push_back("K" + std::to_string(i));
    for (std::size_t i = 0; i < str; ++i) s.structured_names.push_back("c" + std::to_string(i));
    return s;
}

FusedRecord rec(std::vector<double> x, int label, std::string id = "p") {
    return {std::move(id), std::move(x), label};
}

// distance from point to the segment [a, b]
double dist_to_segment(std::span<const double> p, std::span<const double> a,
                       std::span<const double> b) {
    double ab2 = 0, ap_ab = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = b[i] - a[i];
        ab2 += d * d;
        ap_ab += (p[i] - a[i]) * d;
    }
    double t = ab2 > 0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double c = a[i] + t * (b[i] - a[i]) - p[i];
        d2 += c * c;
    }
    return std::sqrt(d2);
}

} // namespace

TEST_CASE("build_vocab keeps the most frequent tokens") {
    std::vector<TaggedSentence> sents = {sent({"a", "a", "a", "b", "b", "c"}),
                                         sent({"a", "a", "b"})};
    auto v = build_vocab(sents, 2);
    CHECK(v.size() == 3); // UNK + 2
    CHECK(v.id("a") == 1);
    CHECK(v.id("b") == 2);
    CHECK(v.id("c") == Vocabulary::kUnk);

    auto all = build_vocab(sents, 100);
    CHECK(all.size() == 4); // no truncation
}

TEST_CASE("build_vocab breaks frequency ties lexicographically") {
    std::vector<TaggedSentence> sents = {sent({"zebra", "apple"})};
    auto v = build_vocab(sents, 1);
    CHECK(v.size() == 2);
    CHECK(v.id("apple") == 1);
    CHECK(v.id("zebra") == Vocabulary::kUnk);
}

TEST_CASE("build_vocab on an empty corpus holds only UNK") {
    std::vector<TaggedSentence> empty;
    auto v = build_vocab(empty, 10);
    CHECK(v.size() == 1);
    CHECK(v.id("anything") == Vocabulary::kUnk);
}

TEST_CASE("bow_vector counts tokens with UNK fallback") {
    std::vector<TaggedSentence> sents = {sent({"a", "b"})};
    auto v = build_vocab(sents, 10);
    std::vector<std::string> toks = {"a", "b", "a"};
    auto bow = bow_vector(toks, v);
    REQUIRE(bow.size() == 3);
    CHECK(bow[v.id("a")] == 2.0);
    CHECK(bow[v.id("b")] == 1.0);
    CHECK(bow[Vocabulary::kUnk] == 0.0);

    std::vector<std::string> oov = {"zzz"};
    auto bow2 = bow_vector(oov, v);
    CHECK(bow2[Vocabulary::kUnk] == 1.0);

    std::vector<std::string> none;
    auto bow3 = bow_vector(none, v);
    CHECK(std::all_of(bow3.begin(), bow3.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("bow_vector entries sum to the token count") {
    std::vector<TaggedSentence> sents = {sent({"a", "b", "c", "d"})};
    auto v = build_vocab(sents, 2);
    Rng rng(4);
    std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> toks;
        std::size_t n = rng.below(20);
        for (std::size_t i = 0; i < n; ++i) toks.push_back(pool[rng.below(pool.size())]);
        auto bow = bow_vector(toks, v);
        double total = 0;
        for (double x : bow) total += x;
        REQUIRE(total == static_cast<double>(n));
    }
}

TEST_CASE("entity_features counts spans per kind") {
    std::vector<std::string> kinds = {"DIS", "SYM"};
    std::vector<EntitySpan> spans = {{1, 3, "DIS"}, {4, 5, "DIS"}};
    auto counts = entity_features(spans, kinds);
    CHECK(counts == std::vector<double>{2.0, 0.0});

    std::vector<EntitySpan> none;
    CHECK(entity_features(none, kinds) == std::vector<double>{0.0, 0.0});

    std::vector<EntitySpan> unknown = {{0, 1, "WAT"}};
    CHECK_THROWS_AS(entity_features(unknown, kinds), ValidationError);
}

TEST_CASE("fuse concatenates blocks and standardizes the structured block") {
    auto schema = tiny_schema(4, 2, 3);
    ScalingStats stats;
    stats.mean = {1.0, 2.0, 3.0};
    stats.stddev = {2.0, 1.0, 0.0}; // constant third column

    std::vector<double> bow = {1, 0, 2, 0}, ent = {1, 0};
    std::vector<double> structured = {3.0, std::nan(""), 7.0};
    auto fused = fuse("p1", bow, ent, structured, 1, schema, stats);
    REQUIRE(fused.x.size() == 9);
    CHECK(fused.x[6] == doctest::Approx(1.0));  // (3-1)/2
    CHECK(fused.x[7] == doctest::Approx(0.0));  // imputed to the mean, then z-scored
    CHECK(fused.x[8] == doctest::Approx(0.0));  // stddev 0 rule
    for (double v : fused.x) CHECK(std::isfinite(v));

    std::vector<double> short_bow = {1, 0};
    CHECK_THROWS_AS(fuse("p1", short_bow, ent, structured, 1, schema, stats), ValidationError);
}

TEST_CASE("fit_scaling produces unit-variance training columns") {
    auto schema = tiny_schema(0, 0, 2);
    Rng rng(7);
    std::vector<FusedRecord> rows;
    for (int i = 0; i < 200; ++i) {
        rows.push_back(rec({rng.normal(5.0, 3.0), rng.normal(-2.0, 0.5)}, i % 2));
    }
    rows[3].x[0] = std::nan(""); // a missing entry must not poison the stats
    auto stats = fit_scaling(rows, schema);

    std::vector<FusedRecord> scaled;
    for (const auto& r : rows) scaled.push_back(standardize(r, schema, stats));
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0, n = 0;
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            if (std::isnan(rows[i].x[c])) continue; // imputed entries sit exactly at 0
            mean += scaled[i].x[c];
            n += 1;
        }
        mean /= n;
        double var = 0;
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            if (std::isnan(rows[i].x[c])) continue;
            var += (scaled[i].x[c] - mean) * (scaled[i].x[c] - mean);
        }
        var /= n;
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-9);
    }
}

TEST_CASE("fit_scaling handles all-missing columns") {
    auto schema = tiny_schema(0, 0, 1);
    std::vector<FusedRecord> rows = {rec({std::nan("")}, 0), rec({std::nan("")}, 1)};
    auto stats = fit_scaling(rows, schema);
    CHECK(stats.mean[0] == 0.0);
    CHECK(stats.stddev[0] == 0.0);
    auto scaled = standardize(rows[0], schema, stats);
    CHECK(scaled.x[0] == 0.0);
}

TEST_CASE("standardize is order-stable over record permutations") {
    auto schema = tiny_schema(1, 0, 1);
    std::vector<FusedRecord> rows = {rec({1, 4.0}, 0, "a"), rec({2, 6.0}, 1, "b"),
                                     rec({3, 8.0}, 0, "c")};
    auto stats = fit_scaling(rows, schema);
    std::vector<FusedRecord> fwd, rev;
    for (const auto& r : rows) fwd.push_back(standardize(r, schema, stats));
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        rev.push_back(standardize(*it, schema, stats));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(fwd[i].x == rev[rows.size() - 1 - i].x);
    }
}

TEST_CASE("smote_interpolate midpoint") {
    std::vector<double> p = {0, 0}, q = {1, 1};
    CHECK(smote_interpolate(p, q, 0.5) == std::vector<double>{0.5, 0.5});
    CHECK(smote_interpolate(p, q, 0.0) == p);
    CHECK(smote_interpolate(p, q, 1.0) == q);
}

TEST_CASE("smote balances classes and keeps originals unmodified") {
    Rng rng(15);
    std::vector<FusedRecord> rows;
    for (int i = 0; i < 40; ++i) rows.push_back(rec({rng.normal(), rng.normal()}, 0));
    for (int i = 0; i < 12; ++i) {
        rows.push_back(rec({rng.normal(5, 1), rng.normal(5, 1)}, 1, "m" + std::to_string(i)));
    }
    auto out = smote(rows, 5, 99);

    std::size_t pos = 0, neg = 0;
    for (const auto& r : out) (r.label == 1 ? pos : neg) += 1;
    CHECK(pos == neg);
    REQUIRE(out.size() == 80);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(out[i].patient_id == rows[i].patient_id);
        CHECK(out[i].x == rows[i].x);
        CHECK(out[i].label == rows[i].label);
    }
}

TEST_CASE("smote is a no-op on balanced input") {
    std::vector<FusedRecord> rows = {rec({0, 0}, 0), rec({1, 1}, 1)};
    auto out = smote(rows, 1, 5);
    REQUIRE(out.size() == 2);
    CHECK(out[0].x == rows[0].x);
    CHECK(out[1].x == rows[1].x);
}

TEST_CASE("smote rejects single-class input and duplicates singleton minorities") {
    std::vector<FusedRecord> single = {rec({0}, 0), rec({1}, 0)};
    CHECK_THROWS_AS(smote(single, 1, 1), ValidationError);

    std::vector<FusedRecord> lone = {rec({0, 0}, 0), rec({1, 1}, 0), rec({2, 2}, 0),
                                     rec({9, 9}, 1)};
    auto out = smote(lone, 5, 1);
    std::size_t pos = 0;
    for (const auto& r : out) pos += r.label == 1 ? 1 : 0;
    CHECK(pos == 3);
    for (const auto& r : out) {
        if (r.label == 1) CHECK(r.x == std::vector<double>{9, 9});
    }
}

TEST_CASE("every smote synthetic lies on a segment between minority points") {
    Rng rng(77);
    std::vector<FusedRecord> rows;
    const std::size_t dim = 6;
    auto draw = [&](double mu) {
        std::vector<double> x(dim);
        for (auto& v : x) v = rng.normal(mu, 1.0);
        return x;
    };
    for (int i = 0; i < 1050; ++i) rows.push_back(rec(draw(0.0), 0));
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 50; ++i) {
        auto x = draw(4.0);
        minority.push_back(x);
        rows.push_back(rec(std::move(x), 1));
    }

    auto out = smote(rows, 5, 123);
    REQUIRE(out.size() == 2100); // 1000 synthetics appended
    for (std::size_t s = rows.size(); s < out.size(); ++s) {
        REQUIRE(out[s].label == 1);
        double best = 1e300;
        for (std::size_t a = 0; a < minority.size() && best > 1e-9; ++a) {
            for (std::size_t b = a + 1; b < minority.size() && best > 1e-9; ++b) {
                best = std::min(best, dist_to_segment(out[s].x, minority[a], minority[b]));
            }
        }
        REQUIRE(best <= 1e-9);
    }
}

TEST_CASE("smote is deterministic for a fixed seed") {
    Rng rng(3);
    std::vector<FusedRecord> rows;
    for (int i = 0; i < 20; ++i) rows.push_back(rec({rng.normal(), rng.normal()}, 0));
    for (int i = 0; i < 7; ++i) rows.push_back(rec({rng.normal(3, 1), rng.normal(3, 1)}, 1));
    auto a = smote(rows, 3, 42);
    auto b = smote(rows, 3, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);
}

TEST_CASE("fused csv round-trips through disk") {
    auto schema = tiny_schema(2, 1, 2);
    std::vector<FusedRecord> rows = {rec({1, 0, 2, 0.5, std::nan("")}, 1, "a"),
                                     rec({0, 3, 0, -1.25, 7.0}, 0, "b")};
    auto dir = std::filesystem::temp_directory_path() / "diabrisk_fused_io";
    std::filesystem::create_directories(dir);
    write_fused_csv(dir / "f.csv", rows, schema);
    auto back = read_fused_csv(dir / "f.csv", schema);
    REQUIRE(back.size() == 2);
    CHECK(back[0].patient_id == "a");
    CHECK(back[0].label == 1);
    CHECK(back[0].x[3] == 0.5);
    CHECK(std::isnan(back[0].x[4]));
    CHECK(back[1].x == rows[1].x);

    // header mismatch is a schema error
    auto other = tiny_schema(2, 1, 1);
    CHECK_THROWS_AS(read_fused_csv(dir / "f.csv", other), ValidationError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fused schema round-trips through json") {
    auto schema = tiny_schema(3, 2, 4);
    auto j = schema.to_json();
    auto back = FusedSchema::from_json(j);
    CHECK(back.bow_names == schema.bow_names);
    CHECK(back.entity_kinds == schema.entity_kinds);
    CHECK(back.structured_names == schema.structured_names);
    CHECK(back.dim() == 9);

    Json wrong = j;
    wrong["schema_version"] = 999;
    CHECK_THROWS_AS(FusedSchema::from_json(wrong), ValidationError);
}
