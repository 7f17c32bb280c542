#include "diabrisk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "diabrisk/common.hpp"
#include "diabrisk/csv.hpp"
#include "diabrisk/jsonio.hpp"
#include "diabrisk/rng.hpp"

namespace diabrisk {

namespace {

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

} // namespace

TagSet TagSet::for_kinds(std::span<const std::string> kinds) {
    TagSet ts;
    ts.tags.push_back("O");
    ts.roles.push_back(Role::outside);
    ts.kind_of.push_back(-1);
    for (const auto& kind : kinds) {
        if (kind.empty()) throw ValidationError("empty entity kind");
        int ki = static_cast<int>(ts.kinds.size());
        ts.kinds.push_back(kind);
        ts.tags.push_back("B-" + kind);
        ts.roles.push_back(Role::begin);
        ts.kind_of.push_back(ki);
        ts.tags.push_back("I-" + kind);
        ts.roles.push_back(Role::inside);
        ts.kind_of.push_back(ki);
    }
    return ts;
}

std::size_t TagSet::index(const std::string& tag) const {
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (tags[i] == tag) return i;
    }
    throw ValidationError("unknown tag '" + tag + "'");
}

bool TagSet::contains(const std::string& tag) const {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

BioVerdict validate_bio(std::span<const std::string> tags, const TagSet& tag_set) {
    BioVerdict verdict;
    int prev_kind = -1;
    TagSet::Role prev_role = TagSet::Role::outside;
    for (std::size_t i = 0; i < tags.size(); ++i) {
        std::size_t id;
        try {
            id = tag_set.index(tags[i]);
        } catch (const ValidationError&) {
            throw ValidationError("unknown tag '" + tags[i] + "' at index " + std::to_string(i));
        }
        auto role = tag_set.roles[id];
        int kind = tag_set.kind_of[id];
        if (role == TagSet::Role::inside) {
            bool ok = (prev_role == TagSet::Role::begin || prev_role == TagSet::Role::inside) &&
                      prev_kind == kind;
            if (!ok) {
                verdict.valid = false;
                verdict.error_index = i;
                verdict.reason = "I-" + tag_set.kinds[kind] + " without matching B-/I- predecessor";
                return verdict;
            }
        }
        prev_role = role;
        prev_kind = kind;
    }
    return verdict;
}

std::vector<EntitySpan> spans_from_bio(const TaggedSentence& sentence, const TagSet& tag_set) {
    if (sentence.tokens.size() != sentence.tags.size() || sentence.tokens.empty()) {
        throw ValidationError("sentence '" + sentence.patient_id +
                              "': tokens and tags must be non-empty and equally long");
    }
    auto verdict = validate_bio(sentence.tags, tag_set);
    if (!verdict.valid) {
        throw ValidationError("invalid BIO at index " + std::to_string(verdict.error_index) +
                              ": " + verdict.reason);
    }
    std::vector<EntitySpan> spans;
    for (std::size_t i = 0; i < sentence.tags.size();) {
        std::size_t id = tag_set.index(sentence.tags[i]);
        if (tag_set.roles[id] != TagSet::Role::begin) {
            ++i;
            continue;
        }
        int kind = tag_set.kind_of[id];
        std::size_t end = i + 1;
        while (end < sentence.tags.size()) {
            std::size_t nid = tag_set.index(sentence.tags[end]);
            if (tag_set.roles[nid] == TagSet::Role::inside && tag_set.kind_of[nid] == kind) {
                ++end;
            } else {
                break;
            }
        }
        spans.push_back({i, end, tag_set.kinds[kind]});
        i = end;
    }
    return spans;
}

std::vector<std::string> tags_from_spans(std::span<const EntitySpan> spans, std::size_t length) {
    std::vector<EntitySpan> sorted(spans.begin(), spans.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
    std::vector<std::string> tags(length, "O");
    std::size_t prev_end = 0;
    for (const auto& s : sorted) {
        if (s.start >= s.end || s.end > length) {
            throw ValidationError("span out of bounds: [" + std::to_string(s.start) + "," +
                                  std::to_string(s.end) + ") with length " +
                                  std::to_string(length));
        }
        if (s.start < prev_end) throw ValidationError("overlapping spans");
        tags[s.start] = "B-" + s.kind;
        for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = "I-" + s.kind;
        prev_end = s.end;
    }
    return tags;
}

std::string clean_text(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        bool is_space = (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f');
        if (is_space) {
            pending_space = true;
            continue;
        }
        if (c < 0x20 || c == 0x7f) continue; // other control characters dropped
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(clean_text(text));
    std::string chunk;
    auto is_punct = [](unsigned char c) { return c < 0x80 && std::ispunct(c); };
    while (in >> chunk) {
        std::size_t lo = 0, hi = chunk.size();
        std::vector<std::string> lead, trail;
        while (lo < hi && is_punct(static_cast<unsigned char>(chunk[lo]))) {
            lead.emplace_back(1, chunk[lo]);
            ++lo;
        }
        while (hi > lo && is_punct(static_cast<unsigned char>(chunk[hi - 1]))) {
            trail.emplace_back(1, chunk[hi - 1]);
            --hi;
        }
        for (auto& t : lead) tokens.push_back(std::move(t));
        if (hi > lo) tokens.push_back(chunk.substr(lo, hi - lo));
        for (auto it = trail.rbegin(); it != trail.rend(); ++it) tokens.push_back(std::move(*it));
    }
    return tokens;
}

void SynthConfig::validate() const {
    if (n_patients == 0) throw ValidationError("n_patients must be positive");
    if (prevalence < 0.0 || prevalence > 1.0) throw ValidationError("prevalence must be in [0,1]");
    if (entity_rate < 0.0 || entity_rate > 1.0) throw ValidationError("entity_rate must be in [0,1]");
    if (noise < 0.0 || noise > 1.0) throw ValidationError("noise must be in [0,1]");
    if (missing_rate < 0.0 || missing_rate > 1.0)
        throw ValidationError("missing_rate must be in [0,1]");
    if (structured_cols == 0 || structured_cols > 48)
        throw ValidationError("structured_cols must be in [1,48]");
}

namespace {

struct ColumnModel {
    const char* name;
    double neg_mean, neg_sd;
    double pos_mean, pos_sd;
};

// First eight carry the planted signal (strong shifts on glucose/BMI-style
// measurements); the rest are plausible but uninformative filler columns
// for the 48-column profile.
const ColumnModel kColumns[48] = {
    {"age", 47, 11, 58, 9},
    {"bmi", 23.5, 2.8, 28.5, 3.5},
    {"fasting_glucose", 5.1, 0.5, 7.2, 1.0},
    {"systolic_bp", 122, 12, 138, 13},
    {"diastolic_bp", 78, 8, 86, 9},
    {"triglycerides", 1.4, 0.5, 2.1, 0.7},
    {"hdl_c", 1.5, 0.3, 1.1, 0.25},
    {"waist_circumference", 84, 8, 98, 9},
    {"gender", 0.5, 0.5, 0.5, 0.5},
    {"ast_alt_ratio", 1.1, 0.3, 1.1, 0.3},
    {"hematocrit", 42, 4, 42, 4},
    {"red_cell_distribution_width", 13, 1, 13, 1},
    {"mean_corpuscular_volume", 90, 5, 90, 5},
    {"creatine_kinase", 120, 40, 120, 40},
    {"lymphocyte_percentage", 32, 6, 32, 6},
    {"total_lymphocyte_count", 2.1, 0.5, 2.1, 0.5},
    {"urine_bilirubin", 0.2, 0.1, 0.2, 0.1},
    {"urine_urobilinogen", 0.5, 0.2, 0.5, 0.2},
    {"urine_protein", 0.1, 0.05, 0.1, 0.05},
    {"urine_wbc", 2, 1, 2, 1},
    {"urine_rbc", 1, 0.6, 1, 0.6},
    {"urea", 5.2, 1.2, 5.2, 1.2},
    {"urine_ph", 6.2, 0.6, 6.2, 0.6},
    {"urine_glucose", 0.1, 0.05, 0.1, 0.05},
    {"urine_ketones", 0.1, 0.05, 0.1, 0.05},
    {"mchc", 340, 10, 340, 10},
    {"mean_platelet_volume", 10.5, 1, 10.5, 1},
    {"height", 168, 9, 168, 9},
    {"lower_limb_edema", 0.1, 0.3, 0.1, 0.3},
    {"weight", 68, 12, 68, 12},
    {"ecg_abnormal", 0.2, 0.4, 0.2, 0.4},
    {"heart_rate", 74, 10, 74, 10},
    {"cbc_wbc", 6.5, 1.5, 6.5, 1.5},
    {"cbc_rbc", 4.7, 0.4, 4.7, 0.4},
    {"ast", 24, 8, 24, 8},
    {"ldl_c", 2.9, 0.7, 2.9, 0.7},
    {"alt", 22, 9, 22, 9},
    {"total_cholesterol", 4.8, 0.9, 4.8, 0.9},
    {"platelet_distribution_width", 13, 2, 13, 2},
    {"platelet_count", 250, 50, 250, 50},
    {"nitrites", 0.05, 0.02, 0.05, 0.02},
    {"fatty_liver_flag", 0.2, 0.4, 0.2, 0.4},
    {"neutrophil_percentage", 58, 8, 58, 8},
    {"total_neutrophil_count", 3.8, 1, 3.8, 1},
    {"pupil_dilation", 4, 0.6, 4, 0.6},
    {"proportion_lymphoid", 0.3, 0.05, 0.3, 0.05},
    {"mean_corpuscular_hemoglobin", 30, 2, 30, 2},
    {"basophil_percentage", 0.6, 0.2, 0.6, 0.2},
};

using Phrase = std::vector<std::string>;

const std::vector<Phrase> kDiseases = {
    {"diabetes"},
    {"type", "two", "diabetes"},
    {"impaired", "glucose", "tolerance"},
    {"hypertension"},
    {"fatty", "liver"},
    {"hyperlipidemia"},
    {"obesity"},
    {"coronary", "heart", "disease"},
};

const std::vector<Phrase> kSymptoms = {
    {"polyuria"},
    {"polydipsia"},
    {"blurred", "vision"},
    {"fatigue"},
    {"weight", "loss"},
    {"numbness"},
    {"excessive", "thirst"},
    {"dizziness"},
    {"dry", "mouth"},
};

const std::vector<Phrase> kTreatments = {
    {"metformin"},
    {"insulin", "therapy"},
    {"lifestyle", "intervention"},
    {"statin"},
    {"dietary", "control"},
    {"exercise", "program"},
    {"glucose", "monitoring"},
};

const std::vector<std::string> kFillers = {
    "symptoms", "findings", "issues", "concerns", "status", "condition", "measures",
};

// Templates: plain tokens plus [D]/[S]/[T] entity slots.
const std::vector<std::string> kLightTemplates = {
    "follow up visit with no acute complaints",
    "routine checkup results discussed with patient",
    "patient denies [S] at this visit",
    "labs reviewed and [T] continued",
    "general condition stable since last review",
};

const std::vector<std::string> kHeavyTemplates = {
    "patient reports [S] and [S] over recent weeks",
    "history of [D] managed with [T]",
    "examination shows [S] consistent with [D]",
    "assessment notes [D] and ongoing [S]",
    "started [T] for newly diagnosed [D]",
    "complains of [S] together with [S] since spring",
};

const std::string kKinds[3] = {"DISEASE", "SYMPTOM", "TREATMENT"};

const Phrase& pick_phrase(Rng& rng, int kind, bool positive_profile) {
    switch (kind) {
    case 0:
        // positive notes lean toward the glucose-related diseases
        if (positive_profile && rng.bernoulli(0.6)) return kDiseases[rng.below(3)];
        return kDiseases[rng.below(kDiseases.size())];
    case 1:
        return kSymptoms[rng.below(kSymptoms.size())];
    default:
        return kTreatments[rng.below(kTreatments.size())];
    }
}

void emit_note(Rng& rng, const SynthConfig& config, bool positive_profile,
               const std::string& patient_id, std::vector<TaggedSentence>& out) {
    double heavy_prob = positive_profile ? 0.75 : 0.30;
    const auto& pool = rng.bernoulli(heavy_prob) ? kHeavyTemplates : kLightTemplates;
    const std::string& tmpl = pool[rng.below(pool.size())];

    TaggedSentence sent;
    sent.patient_id = patient_id;
    std::istringstream in(tmpl);
    std::string word;
    while (in >> word) {
        int kind = -1;
        if (word == "[D]") kind = 0;
        else if (word == "[S]") kind = 1;
        else if (word == "[T]") kind = 2;
        if (kind < 0) {
            sent.tokens.push_back(word);
            sent.tags.push_back("O");
            continue;
        }
        if (!rng.bernoulli(config.entity_rate)) {
            sent.tokens.push_back(kFillers[rng.below(kFillers.size())]);
            sent.tags.push_back("O");
            continue;
        }
        const Phrase& phrase = pick_phrase(rng, kind, positive_profile);
        for (std::size_t i = 0; i < phrase.size(); ++i) {
            sent.tokens.push_back(phrase[i]);
            sent.tags.push_back((i == 0 ? "B-" : "I-") + kKinds[kind]);
        }
    }
    out.push_back(std::move(sent));
}

} // namespace

Corpus generate_synthetic_corpus(std::uint64_t seed, const SynthConfig& config) {
    config.validate();
    Rng rng(derive_seed(seed, "synth"));

    const std::size_t n = config.n_patients;
    const std::size_t n_pos = round_count(config.prevalence * static_cast<double>(n));
    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n_pos; ++i) labels[i] = 1;
    rng.shuffle(labels);

    std::size_t width = std::to_string(n).size();
    auto make_id = [&](std::size_t i) {
        std::string digits = std::to_string(i + 1);
        return "p" + std::string(width - digits.size(), '0') + digits;
    };

    Corpus corpus;
    std::vector<std::string> kinds(std::begin(kKinds), std::end(kKinds));
    corpus.tag_set = TagSet::for_kinds(kinds);
    for (std::size_t j = 0; j < config.structured_cols; ++j) {
        corpus.feature_names.push_back(kColumns[j].name);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = labels[i] == 1;
        const bool flip = rng.bernoulli(config.noise);
        const bool text_profile = flip ? !positive : positive;
        const std::string pid = make_id(i);

        std::size_t n_notes = 1 + (rng.bernoulli(0.5) ? 1 : 0);
        for (std::size_t s = 0; s < n_notes; ++s) {
            emit_note(rng, config, text_profile, pid, corpus.sentences);
        }

        StructuredRecord rec;
        rec.patient_id = pid;
        rec.label = labels[i];
        for (std::size_t j = 0; j < config.structured_cols; ++j) {
            const auto& col = kColumns[j];
            double v = positive ? rng.normal(col.pos_mean, col.pos_sd)
                                : rng.normal(col.neg_mean, col.neg_sd);
            v = std::round(v * 1000.0) / 1000.0;
            if (rng.bernoulli(config.missing_rate)) v = std::nan("");
            rec.values.push_back(v);
        }
        corpus.records.push_back(std::move(rec));
    }

    validate_corpus(corpus);
    return corpus;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double train_ratio, std::uint64_t seed) {
    if (n == 0) throw ValidationError("cannot split an empty dataset");
    if (!(train_ratio > 0.0) || train_ratio > 1.0)
        throw ValidationError("train_ratio must be in (0,1]");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    std::size_t n_train = round_count(train_ratio * static_cast<double>(n));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> test(idx.begin() + n_train, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("k must be at least 2");
    if (k > n) throw ValidationError("k exceeds dataset size");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds;
    std::size_t base = n / k, rem = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t len = base + (f < rem ? 1 : 0);
        std::vector<std::size_t> test(idx.begin() + pos, idx.begin() + pos + len);
        std::vector<std::size_t> train;
        train.insert(train.end(), idx.begin(), idx.begin() + pos);
        train.insert(train.end(), idx.begin() + pos + len, idx.end());
        std::sort(test.begin(), test.end());
        std::sort(train.begin(), train.end());
        folds.emplace_back(std::move(train), std::move(test));
        pos += len;
    }
    return folds;
}

Corpus subset_corpus(const Corpus& corpus, std::span<const std::size_t> record_indices) {
    Corpus out;
    out.feature_names = corpus.feature_names;
    out.tag_set = corpus.tag_set;
    std::unordered_set<std::string> pids;
    for (std::size_t i : record_indices) {
        out.records.push_back(corpus.records[i]);
        pids.insert(corpus.records[i].patient_id);
    }
    for (const auto& s : corpus.sentences) {
        if (pids.count(s.patient_id)) out.sentences.push_back(s);
    }
    return out;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_ratio,
                                       std::uint64_t seed) {
    auto [train_idx, test_idx] = split_indices(corpus.records.size(), train_ratio, seed);
    return {subset_corpus(corpus, train_idx), subset_corpus(corpus, test_idx)};
}

void validate_corpus(const Corpus& corpus) {
    std::unordered_set<std::string> pids;
    for (const auto& rec : corpus.records) {
        if (!pids.insert(rec.patient_id).second) {
            throw ValidationError("duplicate patient_id '" + rec.patient_id + "'");
        }
        if (rec.label != 0 && rec.label != 1) {
            throw ValidationError("label for '" + rec.patient_id + "' must be 0 or 1");
        }
        if (rec.values.size() != corpus.feature_names.size()) {
            throw ValidationError("record '" + rec.patient_id + "' has " +
                                  std::to_string(rec.values.size()) + " values, schema has " +
                                  std::to_string(corpus.feature_names.size()));
        }
    }
    for (const auto& s : corpus.sentences) {
        if (s.tokens.empty() || s.tokens.size() != s.tags.size()) {
            throw ValidationError("sentence for '" + s.patient_id +
                                  "': tokens and tags must be non-empty and equally long");
        }
        if (!pids.count(s.patient_id)) {
            throw ValidationError("sentence patient_id '" + s.patient_id + "' has no record");
        }
        auto verdict = validate_bio(s.tags, corpus.tag_set);
        if (!verdict.valid) {
            throw ValidationError("invalid BIO for '" + s.patient_id + "' at index " +
                                  std::to_string(verdict.error_index) + ": " + verdict.reason);
        }
    }
}

std::string to_conll(std::span<const TaggedSentence> sentences) {
    std::ostringstream out;
    for (const auto& s : sentences) {
        out << "# patient_id: " << s.patient_id << '\n';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            out << s.tokens[i] << '\t' << s.tags[i] << '\n';
        }
        out << '\n';
    }
    return out.str();
}

std::vector<TaggedSentence> parse_conll(const std::string& text) {
    std::vector<TaggedSentence> sentences;
    TaggedSentence current;
    bool open = false;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    auto flush = [&]() {
        if (!open) return;
        if (current.tokens.empty()) {
            throw ValidationError("empty sentence for patient '" + current.patient_id + "'");
        }
        sentences.push_back(std::move(current));
        current = TaggedSentence{};
        open = false;
    };
    const std::string marker = "# patient_id:";
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.rfind(marker, 0) == 0) {
            flush();
            std::string pid = line.substr(marker.size());
            std::size_t b = pid.find_first_not_of(' ');
            current.patient_id = b == std::string::npos ? "" : pid.substr(b);
            if (current.patient_id.empty()) {
                throw ValidationError("line " + std::to_string(line_no) + ": empty patient_id");
            }
            open = true;
            continue;
        }
        if (!open) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": token outside any sentence (missing patient_id header)");
        }
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": expected token<TAB>tag, got '" + line + "'");
        }
        current.tokens.push_back(line.substr(0, tab));
        current.tags.push_back(line.substr(tab + 1));
    }
    flush();
    return sentences;
}

void write_conll(const std::filesystem::path& path, std::span<const TaggedSentence> sentences) {
    atomic_write_file(path, to_conll(sentences));
}

std::vector<TaggedSentence> read_conll(const std::filesystem::path& path) {
    return parse_conll(read_text_file(path));
}

std::string records_to_csv(std::span<const StructuredRecord> records,
                           std::span<const std::string> feature_names) {
    CsvTable table;
    table.header.push_back("patient_id");
    for (const auto& name : feature_names) table.header.push_back(name);
    table.header.push_back("diabetes");
    for (const auto& rec : records) {
        std::vector<std::string> row;
        row.push_back(rec.patient_id);
        for (double v : rec.values) {
            row.push_back(std::isnan(v) ? std::string{} : format_double(v));
        }
        row.push_back(std::to_string(rec.label));
        table.rows.push_back(std::move(row));
    }
    return to_csv(table);
}

void write_records_csv(const std::filesystem::path& path, std::span<const StructuredRecord> records,
                       std::span<const std::string> feature_names) {
    atomic_write_file(path, records_to_csv(records, feature_names));
}

std::pair<std::vector<StructuredRecord>, std::vector<std::string>>
read_records_csv(const std::filesystem::path& path) {
    CsvTable table = read_csv(path);
    if (table.header.size() < 2 || table.header.front() != "patient_id" ||
        table.header.back() != "diabetes") {
        throw ValidationError(path.string() +
                              ": expected header patient_id,<features...>,diabetes");
    }
    std::vector<std::string> names(table.header.begin() + 1, table.header.end() - 1);
    std::vector<StructuredRecord> records;
    for (const auto& row : table.rows) {
        StructuredRecord rec;
        rec.patient_id = row.front();
        for (std::size_t j = 1; j + 1 < row.size(); ++j) {
            rec.values.push_back(parse_double_or_missing(row[j], path.string()));
        }
        const std::string& lab = row.back();
        if (lab != "0" && lab != "1") {
            throw ValidationError(path.string() + ": diabetes label for '" + rec.patient_id +
                                  "' must be 0 or 1, got '" + lab + "'");
        }
        rec.label = lab == "1" ? 1 : 0;
        records.push_back(std::move(rec));
    }
    return {std::move(records), std::move(names)};
}

Corpus load_corpus(const std::filesystem::path& conll_path,
                   const std::filesystem::path& records_path) {
    Corpus corpus;
    corpus.sentences = read_conll(conll_path);
    auto [records, names] = read_records_csv(records_path);
    corpus.records = std::move(records);
    corpus.feature_names = std::move(names);

    std::set<std::string> kinds;
    for (const auto& s : corpus.sentences) {
        for (const auto& tag : s.tags) {
            if (tag == "O") continue;
            if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
                throw ValidationError("malformed tag '" + tag + "' in " + conll_path.string());
            }
            kinds.insert(tag.substr(2));
        }
    }
    std::vector<std::string> ordered(kinds.begin(), kinds.end());
    corpus.tag_set = TagSet::for_kinds(ordered);
    validate_corpus(corpus);
    return corpus;
}

} // namespace diabrisk
