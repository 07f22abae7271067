#pragma once

// The interactive labeling loop: confidence scoring, least-confident
// sampling, mislabel detection and application of human keep/flip decisions.

#include "xlabel/ebm.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace xlabel::labeling {

enum class Label : std::uint8_t { Negative = 0, Positive = 1, Unlabeled = 2 };
enum class Provenance : std::uint8_t { None, Imported, Human };

inline Label label_from_int(int v) { return v == 1 ? Label::Positive : Label::Negative; }
inline int label_to_int(Label l) { return l == Label::Positive ? 1 : 0; }

std::string_view to_string(Provenance p);

enum class Action : std::uint8_t { Keep, Flip, Set };

struct Decision {
    std::size_t index = 0;
    Action action = Action::Keep;
    /// Only read for Action::Set.
    int value = 0;
};

/// Records of one task split into labeled (X_L) and unlabeled (X_U) parts.
class LabelStore {
public:
    LabelStore() = default;
    LabelStore(std::vector<std::string> feature_names, std::vector<std::string> record_ids,
               std::vector<ebm::FeatureVector> features);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::string& record_id(std::size_t i) const { return ids_.at(i); }
    const ebm::FeatureVector& features(std::size_t i) const { return features_.at(i); }
    Label label(std::size_t i) const { return labels_.at(i); }
    Provenance provenance(std::size_t i) const { return provenance_.at(i); }
    bool is_labeled(std::size_t i) const { return labels_.at(i) != Label::Unlabeled; }
    std::optional<std::size_t> index_of(std::string_view record_id) const;

    std::vector<std::size_t> labeled() const;
    std::vector<std::size_t> unlabeled() const;
    std::size_t labeled_count() const;

    /// Labels carried in by an upload. Refuses to touch a HUMAN label.
    void import_label(std::size_t i, int value);

    /// Replaces the presented batch: record i was shown with pseudo_labels[k].
    void present(std::span<const std::size_t> records, std::span<const int> pseudo_labels);
    std::optional<int> presented_label(std::size_t i) const;
    const std::map<std::size_t, int>& presented() const { return presented_; }

private:
    friend LabelStore apply_labels(LabelStore store, std::span<const Decision> decisions);

    void check_index(std::size_t i) const;

    std::vector<std::string> feature_names_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::vector<ebm::FeatureVector> features_;
    std::vector<Label> labels_;
    std::vector<Provenance> provenance_;
    std::map<std::size_t, int> presented_;
};

/// max{p, 1 - p}: 0.5 is least confident, 1 is most confident.
double confidence_from_probability(double p);
double confidence(const ebm::EbmModel& model, std::span<const double> x);

struct RecordConfidence {
    std::size_t index = 0;
    double p = 0.0;
    double confidence = 0.0;
    int pseudo_label = 0;
};

/// Scores the given records of the store.
std::vector<RecordConfidence> confidence_report(const LabelStore& store, const ebm::EbmModel& model,
                                                std::span<const std::size_t> records);

struct Threshold {
    double t = 0.8;
};
struct NLeast {
    std::size_t n = 20;
};
using SamplingMethod = std::variant<Threshold, NLeast>;

/// Throws InvalidInput unless t is in (0.5, 1] or n is positive.
void validate(const SamplingMethod& method);

/// Selection over already-scored candidates, ascending confidence with ties
/// broken by ascending index.
std::vector<std::size_t> select_least_confident(std::vector<RecordConfidence> candidates,
                                                const SamplingMethod& method);

/// Samples unlabeled records. Throws EmptyPool when X_U is empty.
std::vector<std::size_t> sample(const LabelStore& store, const ebm::EbmModel& model,
                                const SamplingMethod& method);

struct Mismatch {
    std::size_t index = 0;
    int stored_label = 0;
    int pseudo_label = 0;
    double confidence = 0.0;
};

/// Labeled records whose pseudo-label disagrees with the stored label.
std::vector<Mismatch> detect_mismatches(const LabelStore& store, const ebm::EbmModel& model);

/// Applies every decision or none: validation runs before any label changes.
/// Throws InvalidInput for unknown indices or values and ProtocolError for
/// keep/flip on a record without a presented pseudo-label.
LabelStore apply_labels(LabelStore store, std::span<const Decision> decisions);

/// Fits a fresh model on X_L. Propagates DegenerateLabels.
ebm::EbmModel retrain(const LabelStore& store, const ebm::TrainConfig& config);

} // namespace xlabel::labeling
