#include "xlabel/ebm.hpp"
#include "xlabel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace xlabel::ebm {

double logistic(double z) {
    double p;
    if (z >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        p = e / (1.0 + e);
        // exp rounds to 1 for tiny |z|; keep the label decision consistent
        // with the sign of the score.
        p = std::min(p, std::nextafter(0.5, 0.0));
    }
    // open interval (0, 1) even when exp saturates
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

void TrainConfig::validate() const {
    if (max_bins < 2 || max_bins > 65000) {
        throw InvalidInput("max_bins must be in [2, 65000]");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidInput("learning_rate must be a positive finite number");
    }
    if (n_rounds == 0) {
        throw InvalidInput("n_rounds must be positive");
    }
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw InvalidInput("holdout_fraction must be in (0, 1)");
    }
}

EbmModel::EbmModel(std::vector<std::string> feature_names, BinMap bins, double intercept,
                   std::vector<ShapeFunction> shapes, TrainConfig config)
    : feature_names_(std::move(feature_names)),
      bins_(std::move(bins)),
      intercept_(intercept),
      shapes_(std::move(shapes)),
      config_(config) {
    if (bins_.feature_count() != feature_names_.size() || shapes_.size() != feature_names_.size()) {
        throw InvalidInput("feature names, bins and shapes disagree on the feature count");
    }
    for (std::size_t i = 0; i < shapes_.size(); ++i) {
        if (shapes_[i].scores.size() != bins_.feature(i).bin_count()) {
            throw InvalidInput("shape for feature '" + feature_names_[i] +
                               "' does not match its bin count");
        }
    }
}

EbmModel EbmModel::zero(std::vector<std::string> feature_names, BinMap bins) {
    std::vector<ShapeFunction> shapes;
    shapes.reserve(bins.feature_count());
    for (const auto& f : bins.features()) {
        shapes.push_back(ShapeFunction{std::vector<double>(f.bin_count(), 0.0)});
    }
    return EbmModel(std::move(feature_names), std::move(bins), 0.0, std::move(shapes));
}

void EbmModel::check_arity(std::span<const double> x) const {
    if (x.size() != feature_count()) {
        throw InvalidInput("feature vector has " + std::to_string(x.size()) +
                           " values, model expects " + std::to_string(feature_count()));
    }
}

double EbmModel::term(std::size_t feature, double value) const {
    return shapes_[feature].scores[bins_.feature(feature).bin_of(value)];
}

double EbmModel::raw_score(std::span<const double> x) const {
    check_arity(x);
    double score = intercept_;
    for (std::size_t i = 0; i < x.size(); ++i) {
        score += term(i, x[i]);
    }
    return score;
}

double EbmModel::predict_proba(std::span<const double> x) const { return logistic(raw_score(x)); }

int EbmModel::predict_label(std::span<const double> x) const { return raw_score(x) >= 0.0 ? 1 : 0; }

std::vector<Contribution> EbmModel::contributions(std::span<const double> x) const {
    check_arity(x);
    std::vector<Contribution> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back({feature_names_[i], term(i, x[i])});
    }
    return out;
}

std::vector<Contribution> EbmModel::heat(std::span<const double> x) const {
    auto out = contributions(x);
    for (auto& c : out) {
        c.value = logistic(c.value);
    }
    return out;
}

double log_loss(const EbmModel& model, std::span<const FeatureVector> data, std::span<const int> labels) {
    if (data.size() != labels.size() || data.empty()) {
        throw InvalidInput("log_loss needs equally sized, non-empty data and labels");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const double z = model.raw_score(data[r]);
        const double signed_z = labels[r] == 1 ? -z : z;
        // softplus(signed_z) = log(1 + e^signed_z)
        total += signed_z > 0 ? signed_z + std::log1p(std::exp(-signed_z)) : std::log1p(std::exp(signed_z));
    }
    return total / static_cast<double>(data.size());
}

} // namespace xlabel::ebm
