#include "xlabel/ebm.hpp"
#include "xlabel/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace xlabel::ebm {

std::size_t FeatureBins::bin_of(double value) const {
    if (is_missing(value)) {
        return kMissingBin;
    }
    const auto above = std::upper_bound(cuts.begin(), cuts.end(), value);
    return 1 + static_cast<std::size_t>(above - cuts.begin());
}

BinMap::BinMap(std::vector<FeatureBins> features) : features_(std::move(features)) {
    for (const auto& f : features_) {
        for (std::size_t i = 1; i < f.cuts.size(); ++i) {
            if (!(f.cuts[i - 1] < f.cuts[i])) {
                throw InvalidInput("bin cut points must be strictly increasing");
            }
        }
    }
}

namespace {

double midpoint(double lo, double hi) { return lo + (hi - lo) / 2.0; }

std::vector<double> quantile_cuts(std::vector<double> values, std::size_t max_bins) {
    std::sort(values.begin(), values.end());

    // Boundary j separates values[j-1] < values[j]; j counts values below it.
    std::vector<std::size_t> boundaries;
    for (std::size_t j = 1; j < values.size(); ++j) {
        if (values[j - 1] < values[j]) {
            boundaries.push_back(j);
        }
    }

    std::vector<double> cuts;
    if (boundaries.size() + 1 <= max_bins) {
        for (const std::size_t j : boundaries) {
            cuts.push_back(midpoint(values[j - 1], values[j]));
        }
        return cuts;
    }

    const double n = static_cast<double>(values.size());
    for (std::size_t k = 1; k < max_bins; ++k) {
        const double target = n * static_cast<double>(k) / static_cast<double>(max_bins);
        // nearest boundary to the target rank, lower one on ties
        auto it = std::lower_bound(boundaries.begin(), boundaries.end(), target,
                                   [](std::size_t b, double t) { return static_cast<double>(b) < t; });
        std::size_t chosen;
        if (it == boundaries.end()) {
            chosen = boundaries.back();
        } else if (it == boundaries.begin()) {
            chosen = *it;
        } else {
            const std::size_t hi = *it;
            const std::size_t lo = *(it - 1);
            chosen = (static_cast<double>(hi) - target < target - static_cast<double>(lo)) ? hi : lo;
        }
        const double cut = midpoint(values[chosen - 1], values[chosen]);
        if (cuts.empty() || cuts.back() < cut) {
            cuts.push_back(cut);
        }
    }
    return cuts;
}

} // namespace

BinMap build_bins(std::span<const FeatureVector> data, std::size_t max_bins) {
    if (data.empty()) {
        throw InvalidInput("cannot build bins for an empty dataset");
    }
    if (max_bins < 2) {
        throw InvalidInput("max_bins must be at least 2");
    }
    const std::size_t n_features = data.front().size();
    std::vector<FeatureBins> features(n_features);
    std::vector<double> column;
    column.reserve(data.size());
    for (std::size_t f = 0; f < n_features; ++f) {
        column.clear();
        for (const auto& row : data) {
            if (row.size() != n_features) {
                throw InvalidInput("ragged feature rows: expected " + std::to_string(n_features) +
                                   " values, got " + std::to_string(row.size()));
            }
            if (!is_missing(row[f])) {
                column.push_back(row[f]);
            }
        }
        features[f].cuts = quantile_cuts(column, max_bins);
    }
    return BinMap(std::move(features));
}

} // namespace xlabel::ebm
