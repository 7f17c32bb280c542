#include "diabrisk/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "diabrisk/common.hpp"
#include "diabrisk/csv.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

std::size_t Vocabulary::id(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
}

Json Vocabulary::to_json() const {
    Json j = Json::array();
    for (std::size_t i = 1; i < tokens.size(); ++i) j.push_back(tokens[i]);
    return j;
}

Vocabulary Vocabulary::from_json(const Json& j) {
    Vocabulary v;
    v.tokens.push_back("<unk>");
    v.index.emplace("<unk>", kUnk);
    for (const auto& t : j) {
        std::string tok = t.get<std::string>();
        v.index.emplace(tok, v.tokens.size());
        v.tokens.push_back(std::move(tok));
    }
    return v;
}

Vocabulary build_vocab(std::span<const TaggedSentence> sentences, std::size_t max_size) {
    if (max_size < 1) throw ValidationError("max_size must be at least 1");
    std::map<std::string, std::size_t> counts; // ordered: ties resolve lexicographically
    for (const auto& s : sentences) {
        for (const auto& tok : s.tokens) ++counts[tok];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size) ranked.resize(max_size);

    Vocabulary v;
    v.tokens.push_back("<unk>");
    v.index.emplace("<unk>", Vocabulary::kUnk);
    for (auto& [tok, cnt] : ranked) {
        (void)cnt;
        v.index.emplace(tok, v.tokens.size());
        v.tokens.push_back(tok);
    }
    return v;
}

std::vector<double> bow_vector(std::span<const std::string> tokens, const Vocabulary& vocab) {
    std::vector<double> counts(vocab.size(), 0.0);
    for (const auto& tok : tokens) counts[vocab.id(tok)] += 1.0;
    return counts;
}

std::vector<double> entity_features(std::span<const EntitySpan> spans,
                                    std::span<const std::string> kinds) {
    std::vector<double> counts(kinds.size(), 0.0);
    for (const auto& span : spans) {
        auto it = std::find(kinds.begin(), kinds.end(), span.kind);
        if (it == kinds.end()) {
            throw ValidationError("entity kind '" + span.kind + "' not in schema");
        }
        counts[static_cast<std::size_t>(it - kinds.begin())] += 1.0;
    }
    return counts;
}

std::vector<std::string> FusedSchema::column_names() const {
    std::vector<std::string> names;
    names.reserve(dim());
    for (const auto& n : bow_names) names.push_back("bow:" + n);
    for (const auto& n : entity_kinds) names.push_back("ent:" + n);
    for (const auto& n : structured_names) names.push_back("str:" + n);
    return names;
}

Json FusedSchema::to_json() const {
    Json j = schema_header("fused_schema");
    j["bow"] = bow_names;
    j["entity_kinds"] = entity_kinds;
    j["structured"] = structured_names;
    return j;
}

FusedSchema FusedSchema::from_json(const Json& j) {
    check_schema(j, "fused_schema");
    FusedSchema s;
    s.bow_names = j.at("bow").get<std::vector<std::string>>();
    s.entity_kinds = j.at("entity_kinds").get<std::vector<std::string>>();
    s.structured_names = j.at("structured").get<std::vector<std::string>>();
    return s;
}

Json ScalingStats::to_json() const {
    Json j;
    j["mean"] = mean;
    j["stddev"] = stddev;
    return j;
}

ScalingStats ScalingStats::from_json(const Json& j) {
    ScalingStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    return s;
}

ScalingStats fit_scaling(std::span<const FusedRecord> records, const FusedSchema& schema) {
    const std::size_t off = schema.structured_offset();
    const std::size_t len = schema.structured_names.size();
    ScalingStats stats;
    stats.mean.assign(len, 0.0);
    stats.stddev.assign(len, 0.0);
    for (std::size_t c = 0; c < len; ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& rec : records) {
            double v = rec.x.at(off + c);
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        if (n == 0) continue; // all missing: mean 0, stddev 0
        double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& rec : records) {
            double v = rec.x[off + c];
            if (!std::isnan(v)) {
                double d = v - mean;
                ss += d * d;
            }
        }
        stats.mean[c] = mean;
        stats.stddev[c] = std::sqrt(ss / static_cast<double>(n));
    }
    return stats;
}

FusedRecord assemble(std::string patient_id, std::span<const double> bow,
                     std::span<const double> entity, std::span<const double> structured,
                     int label, const FusedSchema& schema) {
    if (bow.size() != schema.bow_names.size() || entity.size() != schema.entity_kinds.size() ||
        structured.size() != schema.structured_names.size()) {
        throw ValidationError("block sizes (" + std::to_string(bow.size()) + "," +
                              std::to_string(entity.size()) + "," +
                              std::to_string(structured.size()) + ") do not match schema (" +
                              std::to_string(schema.bow_names.size()) + "," +
                              std::to_string(schema.entity_kinds.size()) + "," +
                              std::to_string(schema.structured_names.size()) + ")");
    }
    FusedRecord rec;
    rec.patient_id = std::move(patient_id);
    rec.label = label;
    rec.x.reserve(schema.dim());
    rec.x.insert(rec.x.end(), bow.begin(), bow.end());
    rec.x.insert(rec.x.end(), entity.begin(), entity.end());
    rec.x.insert(rec.x.end(), structured.begin(), structured.end());
    return rec;
}

FusedRecord standardize(const FusedRecord& raw, const FusedSchema& schema,
                        const ScalingStats& stats) {
    if (raw.x.size() != schema.dim()) {
        throw ValidationError("record '" + raw.patient_id + "' has dimension " +
                              std::to_string(raw.x.size()) + ", schema needs " +
                              std::to_string(schema.dim()));
    }
    if (stats.mean.size() != schema.structured_names.size()) {
        throw ValidationError("scaling stats cover " + std::to_string(stats.mean.size()) +
                              " columns, schema has " +
                              std::to_string(schema.structured_names.size()));
    }
    FusedRecord out = raw;
    const std::size_t off = schema.structured_offset();
    for (std::size_t c = 0; c < stats.mean.size(); ++c) {
        double v = out.x[off + c];
        if (std::isnan(v)) v = stats.mean[c]; // impute with the training mean
        out.x[off + c] = stats.stddev[c] > 0.0 ? (v - stats.mean[c]) / stats.stddev[c] : 0.0;
    }
    return out;
}

FusedRecord fuse(std::string patient_id, std::span<const double> bow,
                 std::span<const double> entity, std::span<const double> structured, int label,
                 const FusedSchema& schema, const ScalingStats& stats) {
    return standardize(assemble(std::move(patient_id), bow, entity, structured, label, schema),
                       schema, stats);
}

std::vector<double> smote_interpolate(std::span<const double> p, std::span<const double> q,
                                      double t) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] + t * (q[i] - p[i]);
    return out;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

} // namespace

std::vector<FusedRecord> smote(std::span<const FusedRecord> records, std::size_t k,
                               std::uint64_t seed) {
    if (k < 1) throw ValidationError("smote k must be at least 1");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (records[i].label == 1 ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw ValidationError("smote requires both classes present");
    }

    std::vector<FusedRecord> out(records.begin(), records.end());
    const bool pos_minor = pos.size() < neg.size();
    const auto& minority = pos_minor ? pos : neg;
    const auto& majority = pos_minor ? neg : pos;
    std::size_t needed = majority.size() - minority.size();
    if (needed == 0) return out;

    Rng rng(seed);
    const int minority_label = records[minority.front()].label;

    if (minority.size() == 1) {
        // no neighbours to interpolate toward: duplicate exactly
        for (std::size_t s = 0; s < needed; ++s) {
            FusedRecord synth = records[minority.front()];
            synth.patient_id = "synth" + std::to_string(s + 1);
            out.push_back(std::move(synth));
        }
        return out;
    }

    // k nearest minority neighbours per minority point, ties by index
    std::size_t kk = std::min(k, minority.size() - 1);
    std::vector<std::vector<std::size_t>> neighbours(minority.size());
    for (std::size_t a = 0; a < minority.size(); ++a) {
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(minority.size() - 1);
        for (std::size_t b = 0; b < minority.size(); ++b) {
            if (a == b) continue;
            dists.emplace_back(sq_dist(records[minority[a]].x, records[minority[b]].x), b);
        }
        std::sort(dists.begin(), dists.end());
        for (std::size_t j = 0; j < kk; ++j) neighbours[a].push_back(dists[j].second);
    }

    for (std::size_t s = 0; s < needed; ++s) {
        std::size_t a = s % minority.size(); // round-robin over minority points
        const auto& nns = neighbours[a];
        std::size_t b = nns[rng.below(nns.size())];
        double t = rng.uniform();
        FusedRecord synth;
        synth.patient_id = "synth" + std::to_string(s + 1);
        synth.label = minority_label;
        synth.x = smote_interpolate(records[minority[a]].x, records[minority[b]].x, t);
        out.push_back(std::move(synth));
    }
    return out;
}

std::string fused_to_csv(std::span<const FusedRecord> records, const FusedSchema& schema) {
    CsvTable table;
    table.header.push_back("patient_id");
    for (auto& name : schema.column_names()) table.header.push_back(name);
    table.header.push_back("label");
    for (const auto& rec : records) {
        if (rec.x.size() != schema.dim()) {
            throw ValidationError("record '" + rec.patient_id + "' does not match schema");
        }
        std::vector<std::string> row;
        row.push_back(rec.patient_id);
        for (double v : rec.x) row.push_back(std::isnan(v) ? std::string{} : format_double(v));
        row.push_back(std::to_string(rec.label));
        table.rows.push_back(std::move(row));
    }
    return to_csv(table);
}

void write_fused_csv(const std::filesystem::path& path, std::span<const FusedRecord> records,
                     const FusedSchema& schema) {
    atomic_write_file(path, fused_to_csv(records, schema));
}

std::vector<FusedRecord> read_fused_csv(const std::filesystem::path& path,
                                        const FusedSchema& schema) {
    CsvTable table = read_csv(path);
    std::vector<std::string> expected;
    expected.push_back("patient_id");
    for (auto& name : schema.column_names()) expected.push_back(name);
    expected.push_back("label");
    if (table.header != expected) {
        throw ValidationError(path.string() + ": fused CSV header does not match schema");
    }
    std::vector<FusedRecord> records;
    for (const auto& row : table.rows) {
        FusedRecord rec;
        rec.patient_id = row.front();
        for (std::size_t j = 1; j + 1 < row.size(); ++j) {
            rec.x.push_back(parse_double_or_missing(row[j], path.string()));
        }
        const std::string& lab = row.back();
        if (lab != "0" && lab != "1") {
            throw ValidationError(path.string() + ": label must be 0 or 1, got '" + lab + "'");
        }
        rec.label = lab == "1" ? 1 : 0;
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace diabrisk
