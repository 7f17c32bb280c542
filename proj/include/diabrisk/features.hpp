#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "diabrisk/corpus.hpp"
#include "diabrisk/jsonio.hpp"

namespace diabrisk {

// Token index map with UNK reserved at 0.
struct Vocabulary {
    static constexpr std::size_t kUnk = 0;

    std::vector<std::string> tokens; // tokens[0] == "<unk>"
    std::unordered_map<std::string, std::size_t> index;

    std::size_t size() const { return tokens.size(); }
    std::size_t id(const std::string& token) const;

    Json to_json() const;
    static Vocabulary from_json(const Json& j);
};

// Keeps the max_size most frequent tokens; ties at the cutoff go to the
// lexicographically smaller token.
Vocabulary build_vocab(std::span<const TaggedSentence> sentences, std::size_t max_size);

// Counts per vocabulary id; out-of-vocabulary tokens count at UNK.
std::vector<double> bow_vector(std::span<const std::string> tokens, const Vocabulary& vocab);

// Predicted span counts per entity kind. Unknown kinds are schema errors.
std::vector<double> entity_features(std::span<const EntitySpan> spans,
                                    std::span<const std::string> kinds);

// Column layout of a fused vector: [BoW | entity counts | structured].
struct FusedSchema {
    std::vector<std::string> bow_names;
    std::vector<std::string> entity_kinds;
    std::vector<std::string> structured_names;

    std::size_t bow_offset() const { return 0; }
    std::size_t entity_offset() const { return bow_names.size(); }
    std::size_t structured_offset() const { return bow_names.size() + entity_kinds.size(); }
    std::size_t dim() const {
        return bow_names.size() + entity_kinds.size() + structured_names.size();
    }
    std::vector<std::string> column_names() const; // block-qualified

    Json to_json() const;
    static FusedSchema from_json(const Json& j);
};

struct FusedRecord {
    std::string patient_id;
    std::vector<double> x;
    int label = 0;
};

// Per-column mean/stddev of the structured block, fit on training rows only.
struct ScalingStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    Json to_json() const;
    static ScalingStats from_json(const Json& j);
};

// Mean and population stddev over observed (non-NaN) entries; columns with
// no observations get mean 0 and stddev 0.
ScalingStats fit_scaling(std::span<const FusedRecord> records, const FusedSchema& schema);

// Concatenates the three blocks without touching missing values. The
// structured block may hold NaN until standardize() runs.
FusedRecord assemble(std::string patient_id, std::span<const double> bow,
                     std::span<const double> entity, std::span<const double> structured,
                     int label, const FusedSchema& schema);

// Imputes missing structured entries with the training mean, then z-scores
// them; stddev 0 columns map to 0.
FusedRecord standardize(const FusedRecord& raw, const FusedSchema& schema,
                        const ScalingStats& stats);

// assemble + standardize in one step.
FusedRecord fuse(std::string patient_id, std::span<const double> bow,
                 std::span<const double> entity, std::span<const double> structured, int label,
                 const FusedSchema& schema, const ScalingStats& stats);

// Linear interpolation p + t*(q - p); SMOTE's synthesis step.
std::vector<double> smote_interpolate(std::span<const double> p, std::span<const double> q, double t);

// Oversamples the minority class to parity: each synthetic point lies on
// the segment between a minority point and one of its k nearest minority
// neighbours (Euclidean). Originals are returned unmodified, synthetics
// appended. Minority class of size 1 falls back to exact duplication.
std::vector<FusedRecord> smote(std::span<const FusedRecord> records, std::size_t k,
                               std::uint64_t seed);

std::string fused_to_csv(std::span<const FusedRecord> records, const FusedSchema& schema);
void write_fused_csv(const std::filesystem::path& path, std::span<const FusedRecord> records,
                     const FusedSchema& schema);
std::vector<FusedRecord> read_fused_csv(const std::filesystem::path& path,
                                        const FusedSchema& schema);

} // namespace diabrisk
