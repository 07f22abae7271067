#include "xlabel/ebm.hpp"
#include "xlabel/errors.hpp"
#include "xlabel/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace xlabel::ebm {

namespace {

using BinIndex = std::uint16_t;

// Records sharing a bin tuple share a score, so boosting runs over the
// distinct tuples weighted by their class counts.
struct Pattern {
    std::vector<BinIndex> bins;
    double positives = 0.0;
    double negatives = 0.0;
};

struct PatternSet {
    std::vector<Pattern> patterns;
    double positives = 0.0;
    double negatives = 0.0;

    double total() const { return positives + negatives; }
};

PatternSet group_rows(const std::vector<std::vector<BinIndex>>& binned, std::span<const int> labels,
                      std::span<const std::size_t> rows) {
    std::map<std::vector<BinIndex>, std::size_t> index;
    PatternSet set;
    for (const std::size_t r : rows) {
        const auto [it, inserted] = index.try_emplace(binned[r], set.patterns.size());
        if (inserted) {
            set.patterns.push_back(Pattern{binned[r], 0.0, 0.0});
        }
        Pattern& p = set.patterns[it->second];
        if (labels[r] == 1) {
            p.positives += 1.0;
            set.positives += 1.0;
        } else {
            p.negatives += 1.0;
            set.negatives += 1.0;
        }
    }
    return set;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double pattern_loss(const PatternSet& set, std::span<const double> scores) {
    double total = 0.0;
    for (std::size_t i = 0; i < set.patterns.size(); ++i) {
        const auto& p = set.patterns[i];
        total += p.positives * softplus(-scores[i]) + p.negatives * softplus(scores[i]);
    }
    return total / set.total();
}

struct BoostResult {
    double intercept = 0.0;
    std::vector<ShapeFunction> shapes;
    std::size_t rounds = 0;
};

// Runs up to max_rounds cyclic rounds on train. With a holdout, returns the
// round count whose holdout loss was lowest (at least one).
BoostResult boost(const PatternSet& train, const PatternSet* holdout, const BinMap& bins,
                  const TrainConfig& config, std::size_t max_rounds) {
    const std::size_t n_features = bins.feature_count();
    BoostResult result;
    result.intercept = std::log(train.positives / train.negatives);
    result.shapes.resize(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        result.shapes[f].scores.assign(bins.feature(f).bin_count(), 0.0);
    }

    std::vector<double> scores(train.patterns.size(), result.intercept);
    std::vector<double> holdout_scores;
    if (holdout != nullptr) {
        holdout_scores.assign(holdout->patterns.size(), result.intercept);
    }

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_round = 1;
    std::vector<double> grad;
    std::vector<double> hess;
    std::vector<double> delta;

    for (std::size_t round = 1; round <= max_rounds; ++round) {
        for (std::size_t f = 0; f < n_features; ++f) {
            const std::size_t n_bins = bins.feature(f).bin_count();
            grad.assign(n_bins, 0.0);
            hess.assign(n_bins, 0.0);
            for (std::size_t i = 0; i < train.patterns.size(); ++i) {
                const auto& pat = train.patterns[i];
                const double p = logistic(scores[i]);
                grad[pat.bins[f]] += pat.positives * (1.0 - p) - pat.negatives * p;
                hess[pat.bins[f]] += (pat.positives + pat.negatives) * p * (1.0 - p);
            }
            delta.assign(n_bins, 0.0);
            for (std::size_t b = 0; b < n_bins; ++b) {
                if (hess[b] > 0.0) {
                    delta[b] = config.learning_rate * grad[b] / std::max(hess[b], 1e-12);
                }
            }
            auto& shape = result.shapes[f].scores;
            for (std::size_t b = 0; b < n_bins; ++b) {
                shape[b] += delta[b];
            }
            for (std::size_t i = 0; i < train.patterns.size(); ++i) {
                scores[i] += delta[train.patterns[i].bins[f]];
            }
            if (holdout != nullptr) {
                for (std::size_t i = 0; i < holdout->patterns.size(); ++i) {
                    holdout_scores[i] += delta[holdout->patterns[i].bins[f]];
                }
            }
        }
        result.rounds = round;
        if (holdout != nullptr) {
            const double loss = pattern_loss(*holdout, holdout_scores);
            if (loss < best_loss) {
                best_loss = loss;
                best_round = round;
            } else if (round - best_round >= config.early_stop_patience) {
                break;
            }
        }
    }
    if (holdout != nullptr) {
        result.rounds = best_round;
    }
    return result;
}

// Stratified holdout; empty when either side would miss a class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_holdout(std::span<const int> labels,
                                                                            double fraction, Rng& rng) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> holdout;
    for (const int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            if (labels[r] == cls) {
                members.push_back(r);
            }
        }
        shuffle(std::span<std::size_t>(members), rng);
        const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        if (n_hold == 0 || n_hold >= members.size()) {
            return {};
        }
        holdout.insert(holdout.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_hold));
        train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_hold), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(holdout.begin(), holdout.end());
    return {std::move(train), std::move(holdout)};
}

} // namespace

EbmModel fit(std::span<const FeatureVector> data, std::span<const int> labels, const TrainConfig& config,
             std::vector<std::string> feature_names) {
    config.validate();
    if (data.size() != labels.size()) {
        throw InvalidInput("data has " + std::to_string(data.size()) + " rows but " +
                           std::to_string(labels.size()) + " labels");
    }
    if (data.size() < 2) {
        throw InvalidInput("fit needs at least two records");
    }
    std::size_t positives = 0;
    for (const int y : labels) {
        if (y != 0 && y != 1) {
            throw InvalidInput("labels must be 0 or 1");
        }
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size()) {
        throw DegenerateLabels("training labels contain a single class");
    }

    const std::size_t n_features = data.front().size();
    if (feature_names.empty()) {
        for (std::size_t f = 0; f < n_features; ++f) {
            feature_names.push_back("f" + std::to_string(f));
        }
    } else if (feature_names.size() != n_features) {
        throw InvalidInput("feature_names has " + std::to_string(feature_names.size()) +
                           " entries, data has " + std::to_string(n_features) + " features");
    }

    BinMap bins = build_bins(data, config.max_bins);
    std::vector<std::vector<BinIndex>> binned(data.size(), std::vector<BinIndex>(n_features));
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t f = 0; f < n_features; ++f) {
            binned[r][f] = static_cast<BinIndex>(bins.feature(f).bin_of(data[r][f]));
        }
    }

    std::vector<std::size_t> all_rows(data.size());
    for (std::size_t r = 0; r < all_rows.size(); ++r) {
        all_rows[r] = r;
    }
    const PatternSet full = group_rows(binned, labels, all_rows);

    // The holdout only picks the round count; the returned model is refit on
    // every record for that many rounds.
    std::size_t rounds = config.n_rounds;
    if (config.early_stop_patience > 0) {
        Rng rng(config.seed);
        const auto [train_rows, holdout_rows] = split_holdout(labels, config.holdout_fraction, rng);
        if (!holdout_rows.empty()) {
            const PatternSet train = group_rows(binned, labels, train_rows);
            const PatternSet holdout = group_rows(binned, labels, holdout_rows);
            rounds = boost(train, &holdout, bins, config, config.n_rounds).rounds;
        }
    }
    BoostResult result = boost(full, nullptr, bins, config, rounds);

    // Center every shape over the training distribution and fold the means
    // into the intercept. Bins no training record hit stay neutral.
    for (std::size_t f = 0; f < n_features; ++f) {
        auto& scores = result.shapes[f].scores;
        std::vector<double> occupancy(scores.size(), 0.0);
        for (const auto& pat : full.patterns) {
            occupancy[pat.bins[f]] += pat.positives + pat.negatives;
        }
        double mean = 0.0;
        for (std::size_t b = 0; b < scores.size(); ++b) {
            mean += occupancy[b] * scores[b];
        }
        mean /= full.total();
        for (std::size_t b = 0; b < scores.size(); ++b) {
            scores[b] = occupancy[b] > 0.0 ? scores[b] - mean : 0.0;
        }
        result.intercept += mean;
    }

    return EbmModel(std::move(feature_names), std::move(bins), result.intercept, std::move(result.shapes),
                    config);
}

} // namespace xlabel::ebm
