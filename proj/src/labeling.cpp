#include "xlabel/labeling.hpp"
#include "xlabel/errors.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace xlabel::labeling {

std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::None:
        return "";
    case Provenance::Imported:
        return "IMPORTED";
    case Provenance::Human:
        return "HUMAN";
    }
    return "";
}

LabelStore::LabelStore(std::vector<std::string> feature_names, std::vector<std::string> record_ids,
                       std::vector<ebm::FeatureVector> features)
    : feature_names_(std::move(feature_names)), ids_(std::move(record_ids)), features_(std::move(features)) {
    if (ids_.size() != features_.size()) {
        throw InvalidInput("record ids and feature rows differ in length");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (features_[i].size() != feature_names_.size()) {
            throw InvalidInput("record '" + ids_[i] + "' has the wrong number of features");
        }
        if (!by_id_.emplace(ids_[i], i).second) {
            throw InvalidInput("duplicate record id '" + ids_[i] + "'");
        }
    }
    labels_.assign(ids_.size(), Label::Unlabeled);
    provenance_.assign(ids_.size(), Provenance::None);
}

void LabelStore::check_index(std::size_t i) const {
    if (i >= ids_.size()) {
        throw InvalidInput("unknown record index " + std::to_string(i));
    }
}

std::optional<std::size_t> LabelStore::index_of(std::string_view record_id) const {
    const auto it = by_id_.find(std::string(record_id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::size_t> LabelStore::labeled() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != Label::Unlabeled) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> LabelStore::unlabeled() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == Label::Unlabeled) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t LabelStore::labeled_count() const {
    return static_cast<std::size_t>(
        std::count_if(labels_.begin(), labels_.end(), [](Label l) { return l != Label::Unlabeled; }));
}

void LabelStore::import_label(std::size_t i, int value) {
    check_index(i);
    if (value != 0 && value != 1) {
        throw InvalidInput("label values must be 0 or 1");
    }
    if (provenance_[i] == Provenance::Human) {
        throw ProtocolError("record '" + ids_[i] + "' carries a human label");
    }
    labels_[i] = label_from_int(value);
    provenance_[i] = Provenance::Imported;
}

void LabelStore::present(std::span<const std::size_t> records, std::span<const int> pseudo_labels) {
    if (records.size() != pseudo_labels.size()) {
        throw InvalidInput("presented records and pseudo-labels differ in length");
    }
    std::map<std::size_t, int> next;
    for (std::size_t k = 0; k < records.size(); ++k) {
        check_index(records[k]);
        next[records[k]] = pseudo_labels[k];
    }
    presented_ = std::move(next);
}

std::optional<int> LabelStore::presented_label(std::size_t i) const {
    const auto it = presented_.find(i);
    if (it == presented_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double confidence_from_probability(double p) { return std::max(p, 1.0 - p); }

double confidence(const ebm::EbmModel& model, std::span<const double> x) {
    return confidence_from_probability(model.predict_proba(x));
}

std::vector<RecordConfidence> confidence_report(const LabelStore& store, const ebm::EbmModel& model,
                                                std::span<const std::size_t> records) {
    std::vector<RecordConfidence> out;
    out.reserve(records.size());
    for (const std::size_t i : records) {
        const auto& x = store.features(i);
        const double score = model.raw_score(x);
        const double p = ebm::logistic(score);
        out.push_back({i, p, confidence_from_probability(p), score >= 0.0 ? 1 : 0});
    }
    return out;
}

void validate(const SamplingMethod& method) {
    if (const auto* th = std::get_if<Threshold>(&method)) {
        if (!(th->t > 0.5 && th->t <= 1.0)) {
            throw InvalidInput("confidence threshold must be in (0.5, 1]");
        }
    } else if (std::get<NLeast>(method).n == 0) {
        throw InvalidInput("sample size n must be positive");
    }
}

std::vector<std::size_t> select_least_confident(std::vector<RecordConfidence> candidates,
                                                const SamplingMethod& method) {
    validate(method);
    std::sort(candidates.begin(), candidates.end(), [](const RecordConfidence& a, const RecordConfidence& b) {
        if (a.confidence != b.confidence) {
            return a.confidence < b.confidence;
        }
        return a.index < b.index;
    });
    std::size_t take = candidates.size();
    if (const auto* th = std::get_if<Threshold>(&method)) {
        const auto first_confident = std::find_if(candidates.begin(), candidates.end(),
                                                  [&](const RecordConfidence& c) { return !(c.confidence < th->t); });
        take = static_cast<std::size_t>(first_confident - candidates.begin());
    } else {
        take = std::min(take, std::get<NLeast>(method).n);
    }
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t k = 0; k < take; ++k) {
        out.push_back(candidates[k].index);
    }
    return out;
}

std::vector<std::size_t> sample(const LabelStore& store, const ebm::EbmModel& model, const SamplingMethod& method) {
    const auto pool = store.unlabeled();
    if (pool.empty()) {
        throw EmptyPool("no unlabeled records remain");
    }
    return select_least_confident(confidence_report(store, model, pool), method);
}

std::vector<Mismatch> detect_mismatches(const LabelStore& store, const ebm::EbmModel& model) {
    std::vector<Mismatch> out;
    const auto labeled = store.labeled();
    for (const auto& rc : confidence_report(store, model, labeled)) {
        const int stored = label_to_int(store.label(rc.index));
        if (stored != rc.pseudo_label) {
            out.push_back({rc.index, stored, rc.pseudo_label, rc.confidence});
        }
    }
    return out;
}

LabelStore apply_labels(LabelStore store, std::span<const Decision> decisions) {
    std::vector<int> resolved;
    resolved.reserve(decisions.size());
    for (const auto& d : decisions) {
        store.check_index(d.index);
        switch (d.action) {
        case Action::Set:
            if (d.value != 0 && d.value != 1) {
                throw InvalidInput("label values must be 0 or 1");
            }
            resolved.push_back(d.value);
            break;
        case Action::Keep:
        case Action::Flip: {
            const auto shown = store.presented_label(d.index);
            if (!shown) {
                throw ProtocolError("record '" + store.ids_[d.index] + "' was not presented with a pseudo-label");
            }
            resolved.push_back(d.action == Action::Keep ? *shown : 1 - *shown);
            break;
        }
        }
    }
    for (std::size_t k = 0; k < decisions.size(); ++k) {
        store.labels_[decisions[k].index] = label_from_int(resolved[k]);
        store.provenance_[decisions[k].index] = Provenance::Human;
    }
    return store;
}

ebm::EbmModel retrain(const LabelStore& store, const ebm::TrainConfig& config) {
    std::vector<ebm::FeatureVector> rows;
    std::vector<int> labels;
    for (const std::size_t i : store.labeled()) {
        rows.push_back(store.features(i));
        labels.push_back(label_to_int(store.label(i)));
    }
    if (rows.size() < 2) {
        throw DegenerateLabels("fewer than two labeled records");
    }
    return ebm::fit(rows, labels, config, store.feature_names());
}

} // namespace xlabel::labeling
