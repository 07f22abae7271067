#pragma once

// Explainable Boosting Machine for binary labels: an additive model
//
//     f(x) = intercept + sum_i shape_i(bin_i(x_i))
//
// where every shape function is piecewise constant over quantile bins of its
// feature. Probabilities come from the logistic link; explanations are the
// per-feature terms themselves.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xlabel::ebm {

/// Marker for an absent reading. Any NaN is treated as missing.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// One reading per schema feature, in schema order.
using FeatureVector = std::vector<double>;

/// Binning of a single feature. Bin 0 is reserved for MISSING; value bins
/// are 1..cuts.size()+1 and a value v lands in bin 1 + #{cut : cut <= v}.
struct FeatureBins {
    std::vector<double> cuts;

    static constexpr std::size_t kMissingBin = 0;

    std::size_t value_bin_count() const { return cuts.size() + 1; }
    std::size_t bin_count() const { return cuts.size() + 2; }
    std::size_t bin_of(double value) const;
};

class BinMap {
public:
    BinMap() = default;
    explicit BinMap(std::vector<FeatureBins> features);

    std::size_t feature_count() const { return features_.size(); }
    const FeatureBins& feature(std::size_t i) const { return features_.at(i); }
    const std::vector<FeatureBins>& features() const { return features_; }

private:
    std::vector<FeatureBins> features_;
};

/// Equal-frequency cut points over the non-missing values of every feature.
/// A feature with at most max_bins distinct values gets one bin per value.
/// Throws InvalidInput on empty data, ragged rows or max_bins < 2.
BinMap build_bins(std::span<const FeatureVector> data, std::size_t max_bins);

struct TrainConfig {
    std::size_t max_bins = 3;
    double learning_rate = 0.05;
    std::size_t n_rounds = 500;
    /// Rounds without holdout improvement before stopping; 0 disables the
    /// holdout entirely and runs all n_rounds on the full data.
    std::size_t early_stop_patience = 50;
    double holdout_fraction = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ShapeFunction {
    /// Indexed by bin; scores[FeatureBins::kMissingBin] is the MISSING score.
    std::vector<double> scores;
};

struct Contribution {
    std::string feature;
    double value = 0.0;
};

class EbmModel {
public:
    EbmModel() = default;
    EbmModel(std::vector<std::string> feature_names, BinMap bins, double intercept,
             std::vector<ShapeFunction> shapes, TrainConfig config = {});

    /// Intercept 0 and every shape identically 0.
    static EbmModel zero(std::vector<std::string> feature_names, BinMap bins);

    double intercept() const { return intercept_; }
    const std::vector<ShapeFunction>& shapes() const { return shapes_; }
    const BinMap& bins() const { return bins_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const TrainConfig& train_config() const { return config_; }
    std::size_t feature_count() const { return feature_names_.size(); }

    /// shape_i(x_i) for one feature.
    double term(std::size_t feature, double value) const;

    double raw_score(std::span<const double> x) const;
    double predict_proba(std::span<const double> x) const;
    /// 1 iff predict_proba(x) >= 0.5, equivalently raw_score(x) >= 0.
    int predict_label(std::span<const double> x) const;
    std::vector<Contribution> contributions(std::span<const double> x) const;
    /// Logistic of each contribution; 0.5 is neutral.
    std::vector<Contribution> heat(std::span<const double> x) const;

private:
    void check_arity(std::span<const double> x) const;

    std::vector<std::string> feature_names_;
    BinMap bins_;
    double intercept_ = 0.0;
    std::vector<ShapeFunction> shapes_;
    TrainConfig config_;
};

double logistic(double z);

/// Mean binary log-loss of the model on (data, labels).
double log_loss(const EbmModel& model, std::span<const FeatureVector> data,
                std::span<const int> labels);

/// Cyclic gradient boosting of per-bin shape updates on the logistic loss.
/// Throws InvalidInput on shape problems and DegenerateLabels when only one
/// class is present. Empty feature_names yields "f0", "f1", ...
EbmModel fit(std::span<const FeatureVector> data, std::span<const int> labels,
             const TrainConfig& config, std::vector<std::string> feature_names = {});

/// Versioned JSON, see docs/model_format.md.
std::string serialize(const EbmModel& model);
/// Throws DeserializeError on malformed input or an unknown version.
EbmModel deserialize(std::string_view bytes);

} // namespace xlabel::ebm
