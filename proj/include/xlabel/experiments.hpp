#pragma once

// Desk-scale versions of the three evaluations: the TotalFlips labeling
// simulation, stratified k-fold metrics and label-noise recovery.

#include "xlabel/ebm.hpp"
#include "xlabel/ncd.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xlabel::experiments {

struct MetricSet {
    double f1 = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

Confusion confusion(std::span<const int> truth, std::span<const int> predicted);
MetricSet metrics(const Confusion& c);

enum class ModelKind { Ebm, RuleBased, AllNegative };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// One task's view of a labeled table. Upstream *_pred inputs are the
/// other tasks' labels, so every record needs all upstream labels.
struct TaskData {
    ncd::Task task = ncd::Task::DM;
    std::vector<ncd::RawRecord> records;
    std::vector<ncd::UpstreamPredictions> upstream;
    std::vector<ebm::FeatureVector> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

/// Throws InvalidInput when a needed label column is absent or has gaps.
TaskData make_task_data(const ncd::RecordTable& table, ncd::Task task,
                        const ncd::ClinicalLists& lists = ncd::ClinicalLists::defaults());

/// Trains `kind` on the given records and labels, then predicts `test`.
/// An EBM facing a single-class training set predicts that class.
class Classifier {
public:
    Classifier(ModelKind kind, ebm::TrainConfig config = {});

    /// Returns false when the training labels hold only one class.
    bool train(const TaskData& data, std::span<const std::size_t> rows, std::span<const int> labels);
    int predict(const TaskData& data, std::size_t row) const;
    /// P(positive) for EBM, the hard label otherwise.
    double score(const TaskData& data, std::size_t row) const;

    ModelKind kind() const { return kind_; }

private:
    ModelKind kind_;
    ebm::TrainConfig config_;
    std::optional<ebm::EbmModel> model_;
    int fallback_ = 0;
};

struct SimConfig {
    double initial_fraction = 0.05;
    std::size_t batch_size = 20;
    std::size_t repetitions = 50;
    std::uint64_t seed = 0;
    /// Reveal the least confident records first instead of random batches.
    bool confidence_ordered = false;
    ebm::TrainConfig train{};

    void validate() const;
};

struct FlipsRun {
    std::size_t total_flips = 0;
    std::size_t initial_count = 0;
    std::size_t predicted = 0;
    std::size_t degenerate_steps = 0;
};

struct FlipsReport {
    ncd::Task task = ncd::Task::DM;
    std::size_t baseline = 0;  // all-negative flips
    std::vector<FlipsRun> runs;
    std::map<std::size_t, std::size_t> histogram;  // TotalFlips -> repetitions

    double median() const;
    double mean() const;
};

std::size_t all_negative_baseline(std::span<const int> labels);

/// Hide all labels, reveal a random initial sample, then repeatedly train on
/// the revealed records and count mistakes on the next revealed batch.
FlipsReport simulate_totalflips(const TaskData& data, const SimConfig& config);

struct FoldResult {
    MetricSet metrics;
    Confusion confusion;
    bool degenerate = false;
};

struct CvReport {
    ncd::Task task = ncd::Task::DM;
    ModelKind kind = ModelKind::Ebm;
    std::vector<FoldResult> folds;
    MetricSet mean;
    MetricSet sd;  // sample standard deviation over usable folds
    std::vector<std::string> warnings;
};

/// Fold index per record; each class is shuffled and dealt round robin.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

CvReport kfold_cv(const TaskData& data, ModelKind kind, std::size_t k = 5, std::uint64_t seed = 0,
                  const ebm::TrainConfig& config = {});

struct NoiseLevelResult {
    double level = 0.0;
    std::size_t flipped = 0;
    std::vector<double> accuracies;  // one per repeat
    double mean_accuracy = 0.0;
};

struct NoiseReport {
    ncd::Task task = ncd::Task::DM;
    ModelKind kind = ModelKind::Ebm;
    std::vector<NoiseLevelResult> levels;
    std::vector<std::string> warnings;
};

std::vector<double> default_noise_levels();

/// Per level p: flip floor(p*N) random labels, train on the noisy labels and
/// score the predictions for the flipped records against their true labels.
NoiseReport label_noise_eval(const TaskData& data, ModelKind kind, std::span<const double> levels,
                             std::size_t repeats = 10, std::uint64_t seed = 0, const ebm::TrainConfig& config = {});

std::string flips_csv(const FlipsReport& report);
std::string flips_json(const FlipsReport& report);
std::string cv_csv(std::span<const CvReport> reports);
std::string cv_json(std::span<const CvReport> reports);
std::string noise_csv(std::span<const NoiseReport> reports);
std::string noise_json(std::span<const NoiseReport> reports);

} // namespace xlabel::experiments
