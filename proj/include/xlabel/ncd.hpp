#pragma once

// Electronic health record side of the workbench: raw visit records, the
// per-disease feature schema, note keyword highlighting, the chained
// DM -> HTN -> CKD -> DLP prediction, the guideline rule baseline and a
// synthetic record generator.

#include "xlabel/ebm.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xlabel::ncd {

enum class Task : std::uint8_t { DM = 0, HTN = 1, CKD = 2, DLP = 3 };

inline constexpr std::array<Task, 4> kChainOrder{Task::DM, Task::HTN, Task::CKD, Task::DLP};
inline constexpr std::size_t kTaskCount = kChainOrder.size();

inline std::size_t index_of(Task t) { return static_cast<std::size_t>(t); }
std::string_view to_string(Task t);
/// Throws InvalidInput for anything but DM, HTN, CKD or DLP.
Task parse_task(std::string_view name);

enum class Lab : std::uint8_t { Glucose, HbA1c, eGFR, Sbp1, Dbp1, LdlC };
inline constexpr std::array<Lab, 6> kAllLabs{Lab::Glucose, Lab::HbA1c, Lab::eGFR, Lab::Sbp1, Lab::Dbp1, Lab::LdlC};

/// Column / feature name, e.g. "LDL-c".
std::string_view to_string(Lab lab);

struct RawRecord {
    std::string id;
    std::optional<double> age;
    std::string sex;
    std::optional<double> height;  // cm
    std::optional<double> weight;  // kg
    std::array<std::optional<double>, kAllLabs.size()> labs;
    std::vector<std::string> icd10_codes;
    std::vector<std::string> drugs;
    std::string note;

    std::optional<double>& lab(Lab l) { return labs[static_cast<std::size_t>(l)]; }
    const std::optional<double>& lab(Lab l) const { return labs[static_cast<std::size_t>(l)]; }

    bool operator==(const RawRecord&) const = default;
};

/// Keyword, ICD-10 prefix and drug lists per task. Defaults follow the
/// clinical lists shipped in config/clinical_lists.txt.
struct ClinicalLists {
    std::array<std::vector<std::string>, kTaskCount> keywords;
    std::array<std::vector<std::string>, kTaskCount> icd10_prefixes;
    std::array<std::vector<std::string>, kTaskCount> drugs;

    static const ClinicalLists& defaults();
    bool operator==(const ClinicalLists&) const = default;
};

/// `<kind>.<TASK> = item, item, ...` lines, '#' comments. Kinds are
/// keywords, icd10 and drugs; every task needs a non-empty keyword list.
ClinicalLists parse_clinical_lists(std::string_view text);
ClinicalLists load_clinical_lists(const std::filesystem::path& path);

/// Ordered feature names of a task's schema row.
const std::vector<std::string>& feature_names(Task task);
/// Tasks whose predictions feed this task's *_pred features.
std::vector<Task> upstream_tasks(Task task);

struct Span {
    std::size_t start = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
    bool operator==(const Span&) const = default;
};

struct KeywordMatch {
    int flag = 0;
    std::vector<Span> spans;  // sorted by (start, end)
};

/// Case-insensitive substring search for every keyword of the task.
KeywordMatch keyword_match(std::string_view note, Task task, const ClinicalLists& lists = ClinicalLists::defaults());

bool has_icd10(const RawRecord& record, Task task, const ClinicalLists& lists = ClinicalLists::defaults());
bool has_drug(const RawRecord& record, Task task, const ClinicalLists& lists = ClinicalLists::defaults());

using UpstreamPredictions = std::map<Task, int>;

/// Throws ChainOrderError if a required *_pred value is absent.
ebm::FeatureVector extract_features(const RawRecord& record, Task task, const UpstreamPredictions& upstream,
                                    const ClinicalLists& lists = ClinicalLists::defaults());

/// Guideline thresholds; missing lab values never trigger a clause.
int rule_based_classify(const RawRecord& record, Task task, const UpstreamPredictions& upstream,
                        const ClinicalLists& lists = ClinicalLists::defaults());

struct TaskChain {
    std::array<std::optional<ebm::EbmModel>, kTaskCount> models;

    void set(Task t, ebm::EbmModel model) { models[index_of(t)] = std::move(model); }
};

struct TaskPrediction {
    int pseudo_label = 0;
    double p = 0.0;
    ebm::FeatureVector features;
    std::vector<ebm::Contribution> heat;
};

/// Runs the chain in `order`, which must be exactly DM, HTN, CKD, DLP.
/// Throws ChainOrderError on a missing model or a different order.
std::map<Task, TaskPrediction> chain_predict(const TaskChain& chain, const RawRecord& record,
                                             std::span<const Task> order = kChainOrder,
                                             const ClinicalLists& lists = ClinicalLists::defaults());

struct SynthConfig {
    std::size_t n_records = 838;
    /// Positive rate per task, in chain order.
    std::array<double, kTaskCount> class_rates{72.0 / 838.0, 139.0 / 838.0, 52.0 / 838.0, 77.0 / 838.0};
    /// Probability that a record is a minor visit without labs or ICD-10 codes.
    double dropout_rate = 0.15;
    /// Probability that a keyword written into a note is mistyped.
    double typo_rate = 0.0;
    /// Probability that each keyword / ICD-10 / drug indicator misfires.
    double flag_noise = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthDataset {
    std::vector<RawRecord> records;
    std::array<std::vector<int>, kTaskCount> labels;
};

/// Records whose hidden disease status drives notes, codes, drugs and labs.
/// Positive counts per task are exactly round(rate * n).
SynthDataset synth_generate(const SynthConfig& config);

/// Uploaded table: records plus optional per-task labels.
struct RecordTable {
    std::vector<RawRecord> records;
    std::array<std::vector<std::optional<int>>, kTaskCount> labels;
    std::array<bool, kTaskCount> has_label_column{};
};

/// Column name of a task's label, e.g. "DM_label".
std::string label_column(Task task);

/// Parses the record CSV. Throws CsvError with row / column diagnostics.
RecordTable read_records_csv(std::string_view text);
/// Extra trailing text columns, one value per record.
struct ExtraColumn {
    std::string name;
    std::vector<std::string> values;
};

/// Fixed column order and shortest round-trip float formatting.
std::string write_records_csv(const RecordTable& table, std::span<const ExtraColumn> extra = {});

RecordTable to_table(const SynthDataset& data);

} // namespace xlabel::ncd
