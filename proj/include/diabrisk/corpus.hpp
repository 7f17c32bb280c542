#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace diabrisk {

// One annotated clinical note. tags[i] labels tokens[i] in BIO scheme.
struct TaggedSentence {
    std::string patient_id;
    std::vector<std::string> tokens;
    std::vector<std::string> tags;
};

// Half-open token range [start, end) of one extracted entity.
struct EntitySpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string kind;

    bool operator==(const EntitySpan&) const = default;
};

// Per-patient structured measurements. NaN marks a missing value; it is
// imputed by the features module, never silently zeroed.
struct StructuredRecord {
    std::string patient_id;
    std::vector<double> values;
    int label = 0; // diabetes status, 0 or 1
};

// Ordered tag alphabet: O first, then B-/I- pairs per entity kind.
struct TagSet {
    enum class Role { outside, begin, inside };

    std::vector<std::string> tags;
    std::vector<std::string> kinds;
    std::vector<Role> roles;   // per tag
    std::vector<int> kind_of;  // per tag, index into kinds; -1 for O

    static TagSet for_kinds(std::span<const std::string> kinds);

    std::size_t size() const { return tags.size(); }
    // Throws ValidationError for tags outside the alphabet.
    std::size_t index(const std::string& tag) const;
    bool contains(const std::string& tag) const;
};

struct Corpus {
    std::vector<TaggedSentence> sentences;
    std::vector<StructuredRecord> records;
    std::vector<std::string> feature_names; // schema for StructuredRecord::values
    TagSet tag_set;
};

struct BioVerdict {
    bool valid = true;
    std::size_t error_index = 0;
    std::string reason;
};

// Valid iff no I-X follows anything other than B-X or I-X. Tags outside
// tag_set throw ValidationError naming the offending index.
BioVerdict validate_bio(std::span<const std::string> tags, const TagSet& tag_set);

// Maximal, non-overlapping spans in document order. Throws on invalid BIO.
std::vector<EntitySpan> spans_from_bio(const TaggedSentence& sentence, const TagSet& tag_set);

// Renders disjoint spans back into a BIO tag sequence of the given length.
std::vector<std::string> tags_from_spans(std::span<const EntitySpan> spans, std::size_t length);

// Text ingestion: strip control characters, collapse whitespace runs, trim.
std::string clean_text(const std::string& raw);

// Whitespace split with leading/trailing punctuation detached as tokens.
std::vector<std::string> tokenize(const std::string& text);

struct SynthConfig {
    std::size_t n_patients = 1000;
    double prevalence = 0.3;
    double entity_rate = 0.85; // chance a template slot receives an entity
    double noise = 0.05;       // chance a patient's note profile is drawn from the other class
    double missing_rate = 0.02;
    std::size_t structured_cols = 8; // 8 or 48

    void validate() const;
};

// Seeded stand-in corpus: positive patients get more DISEASE/SYMPTOM
// mentions and shifted glucose/BMI-style features, so the downstream
// models have a planted signal to find.
Corpus generate_synthetic_corpus(std::uint64_t seed, const SynthConfig& config);

// round(ratio*n) train indices after a seeded shuffle; remainder is test.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double train_ratio, std::uint64_t seed);

// Test folds partition [0,n); sizes differ by at most one, larger first.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Patient-level split: sentences follow their record.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_ratio, std::uint64_t seed);

Corpus subset_corpus(const Corpus& corpus, std::span<const std::size_t> record_indices);

// Every sentence's patient must have a record; all tag sequences valid.
void validate_corpus(const Corpus& corpus);

// CoNLL-style file: "# patient_id: <id>" line, then token<TAB>tag lines,
// blank line between sentences.
std::string to_conll(std::span<const TaggedSentence> sentences);
std::vector<TaggedSentence> parse_conll(const std::string& text);
void write_conll(const std::filesystem::path& path, std::span<const TaggedSentence> sentences);
std::vector<TaggedSentence> read_conll(const std::filesystem::path& path);

// CSV: patient_id first, diabetes last, missing value = empty field.
std::string records_to_csv(std::span<const StructuredRecord> records,
                           std::span<const std::string> feature_names);
void write_records_csv(const std::filesystem::path& path, std::span<const StructuredRecord> records,
                       std::span<const std::string> feature_names);
std::pair<std::vector<StructuredRecord>, std::vector<std::string>>
read_records_csv(const std::filesystem::path& path);

// Assembles and validates a corpus from the two files above, inferring the
// tag alphabet from the tags seen (closed under B-/I- pairing).
Corpus load_corpus(const std::filesystem::path& conll_path, const std::filesystem::path& records_path);

} // namespace diabrisk
