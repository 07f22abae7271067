#include "xlabel/experiments.hpp"

#include "xlabel/errors.hpp"
#include "xlabel/labeling.hpp"
#include "xlabel/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xlabel::experiments {

using ncd::Task;

Confusion confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw InvalidInput("truth and prediction lengths differ");
    }
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            (predicted[i] == 1 ? c.tp : c.fn)++;
        } else {
            (predicted[i] == 1 ? c.fp : c.tn)++;
        }
    }
    return c;
}

MetricSet metrics(const Confusion& c) {
    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : double(a) / double(b); };
    MetricSet m;
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    const double denom = m.precision + m.recall;
    m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
    return m;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Ebm:
        return "EBM";
    case ModelKind::RuleBased:
        return "RuleBased";
    case ModelKind::AllNegative:
        return "AllNegative";
    }
    return "";
}

ModelKind parse_model_kind(std::string_view name) {
    for (const ModelKind k : {ModelKind::Ebm, ModelKind::RuleBased, ModelKind::AllNegative}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw InvalidInput("unknown model kind '" + std::string(name) + "'");
}

TaskData make_task_data(const ncd::RecordTable& table, Task task, const ncd::ClinicalLists& lists) {
    auto column = [&](Task t) -> const std::vector<std::optional<int>>& {
        if (!table.has_label_column[ncd::index_of(t)]) {
            throw InvalidInput("dataset has no " + ncd::label_column(t) + " column");
        }
        return table.labels[ncd::index_of(t)];
    };
    const auto& target = column(task);
    const auto upstream = ncd::upstream_tasks(task);

    TaskData data;
    data.task = task;
    data.records = table.records;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        ncd::UpstreamPredictions up;
        for (const Task u : upstream) {
            const auto& y = column(u)[i];
            if (!y) {
                throw InvalidInput("record '" + table.records[i].id + "' has no " + ncd::label_column(u));
            }
            up[u] = *y;
        }
        if (!target[i]) {
            throw InvalidInput("record '" + table.records[i].id + "' has no " + ncd::label_column(task));
        }
        data.features.push_back(ncd::extract_features(table.records[i], task, up, lists));
        data.upstream.push_back(std::move(up));
        data.labels.push_back(*target[i]);
    }
    return data;
}

Classifier::Classifier(ModelKind kind, ebm::TrainConfig config) : kind_(kind), config_(config) {}

bool Classifier::train(const TaskData& data, std::span<const std::size_t> rows, std::span<const int> labels) {
    if (rows.size() != labels.size()) {
        throw InvalidInput("rows and labels differ in length");
    }
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const bool both = positives > 0 && positives < labels.size();
    model_.reset();
    fallback_ = 2 * positives > labels.size() ? 1 : 0;
    if (kind_ != ModelKind::Ebm || !both) {
        return both;
    }
    std::vector<ebm::FeatureVector> x;
    x.reserve(rows.size());
    for (const std::size_t r : rows) {
        x.push_back(data.features.at(r));
    }
    model_ = ebm::fit(x, labels, config_, ncd::feature_names(data.task));
    return true;
}

int Classifier::predict(const TaskData& data, std::size_t row) const {
    switch (kind_) {
    case ModelKind::Ebm:
        return model_ ? model_->predict_label(data.features.at(row)) : fallback_;
    case ModelKind::RuleBased:
        return ncd::rule_based_classify(data.records.at(row), data.task, data.upstream.at(row));
    case ModelKind::AllNegative:
        return 0;
    }
    return 0;
}

double Classifier::score(const TaskData& data, std::size_t row) const {
    if (kind_ == ModelKind::Ebm && model_) {
        return model_->predict_proba(data.features.at(row));
    }
    return predict(data, row);
}

void SimConfig::validate() const {
    if (!(initial_fraction > 0.0 && initial_fraction < 1.0)) {
        throw InvalidInput("initial_fraction must lie in (0, 1)");
    }
    if (batch_size == 0) {
        throw InvalidInput("batch_size must be at least 1");
    }
    if (repetitions == 0) {
        throw InvalidInput("repetitions must be at least 1");
    }
    train.validate();
}

double FlipsReport::median() const {
    if (runs.empty()) {
        return 0.0;
    }
    std::vector<std::size_t> v;
    for (const auto& r : runs) {
        v.push_back(r.total_flips);
    }
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? double(v[mid]) : (double(v[mid - 1]) + double(v[mid])) / 2.0;
}

double FlipsReport::mean() const {
    if (runs.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& r : runs) {
        sum += double(r.total_flips);
    }
    return sum / double(runs.size());
}

std::size_t all_negative_baseline(std::span<const int> labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

void require_both_classes(std::span<const int> labels) {
    const auto pos = all_negative_baseline(labels);
    if (pos == 0 || pos == labels.size()) {
        throw DegenerateLabels("the dataset needs both positive and negative labels");
    }
}

std::vector<int> labels_of(const TaskData& data, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const std::size_t r : rows) {
        out.push_back(data.labels[r]);
    }
    return out;
}

FlipsRun simulate_once(const TaskData& data, const SimConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = data.size();
    const auto order = permutation(n, rng);
    const auto initial = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.initial_fraction * double(n))), 1, n - 1);

    FlipsRun run;
    run.initial_count = initial;
    std::vector<std::size_t> revealed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(initial));
    std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(initial), order.end());
    for (std::uint64_t step = 0; !pool.empty(); ++step) {
        ebm::TrainConfig train = config.train;
        train.seed = derive_seed(seed, step);
        Classifier model(ModelKind::Ebm, train);
        if (!model.train(data, revealed, labels_of(data, revealed))) {
            ++run.degenerate_steps;
        }
        if (config.confidence_ordered) {
            std::vector<std::pair<double, std::size_t>> ranked;
            for (const std::size_t r : pool) {
                ranked.emplace_back(labeling::confidence_from_probability(model.score(data, r)), r);
            }
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                pool[i] = ranked[i].second;
            }
        }
        const std::size_t take = std::min(config.batch_size, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            if (model.predict(data, pool[i]) != data.labels[pool[i]]) {
                ++run.total_flips;
            }
        }
        run.predicted += take;
        revealed.insert(revealed.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return run;
}

MetricSet mean_of(const std::vector<MetricSet>& xs) {
    MetricSet m;
    for (const auto& x : xs) {
        m.f1 += x.f1;
        m.accuracy += x.accuracy;
        m.precision += x.precision;
        m.recall += x.recall;
    }
    if (!xs.empty()) {
        const double n = double(xs.size());
        m.f1 /= n;
        m.accuracy /= n;
        m.precision /= n;
        m.recall /= n;
    }
    return m;
}

MetricSet sd_of(const std::vector<MetricSet>& xs, const MetricSet& mean) {
    MetricSet s;
    if (xs.size() < 2) {
        return s;
    }
    for (const auto& x : xs) {
        s.f1 += (x.f1 - mean.f1) * (x.f1 - mean.f1);
        s.accuracy += (x.accuracy - mean.accuracy) * (x.accuracy - mean.accuracy);
        s.precision += (x.precision - mean.precision) * (x.precision - mean.precision);
        s.recall += (x.recall - mean.recall) * (x.recall - mean.recall);
    }
    const double d = double(xs.size() - 1);
    s.f1 = std::sqrt(s.f1 / d);
    s.accuracy = std::sqrt(s.accuracy / d);
    s.precision = std::sqrt(s.precision / d);
    s.recall = std::sqrt(s.recall / d);
    return s;
}

} // namespace

FlipsReport simulate_totalflips(const TaskData& data, const SimConfig& config) {
    config.validate();
    if (data.size() < 2) {
        throw InvalidInput("the simulation needs at least two records");
    }
    require_both_classes(data.labels);

    FlipsReport report;
    report.task = data.task;
    report.baseline = all_negative_baseline(data.labels);
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        report.runs.push_back(simulate_once(data, config, derive_seed(config.seed, rep)));
        ++report.histogram[report.runs.back().total_flips];
    }
    return report;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw InvalidInput("k must be at least 2");
    }
    if (labels.size() < k) {
        throw InvalidInput("fewer records than folds");
    }
    Rng rng(seed);
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(i);
    }
    shuffle(std::span<std::size_t>(pos), rng);
    shuffle(std::span<std::size_t>(neg), rng);
    std::vector<std::size_t> fold(labels.size());
    std::size_t dealt = 0;
    for (const auto* group : {&pos, &neg}) {
        for (const std::size_t i : *group) {
            fold[i] = dealt++ % k;
        }
    }
    return fold;
}

CvReport kfold_cv(const TaskData& data, ModelKind kind, std::size_t k, std::uint64_t seed,
                  const ebm::TrainConfig& config) {
    const auto fold = stratified_folds(data.labels, k, seed);
    CvReport report;
    report.task = data.task;
    report.kind = kind;
    std::vector<MetricSet> usable;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows;
        std::vector<std::size_t> test_rows;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (fold[i] == f ? test_rows : train_rows).push_back(i);
        }
        ebm::TrainConfig fold_config = config;
        fold_config.seed = derive_seed(seed, f);
        Classifier model(kind, fold_config);
        FoldResult result;
        result.degenerate = !model.train(data, train_rows, labels_of(data, train_rows));
        std::vector<int> predicted;
        for (const std::size_t r : test_rows) {
            predicted.push_back(model.predict(data, r));
        }
        result.confusion = confusion(labels_of(data, test_rows), predicted);
        result.metrics = metrics(result.confusion);
        if (result.degenerate) {
            report.warnings.push_back("fold " + std::to_string(f + 1) +
                                      " has a single-class training split and is left out of the mean");
        } else {
            usable.push_back(result.metrics);
        }
        report.folds.push_back(result);
    }
    if (usable.empty()) {
        report.warnings.push_back("no usable folds");
    }
    report.mean = mean_of(usable);
    report.sd = sd_of(usable, report.mean);
    return report;
}

std::vector<double> default_noise_levels() {
    std::vector<double> out;
    for (int i = 1; i <= 10; ++i) {
        out.push_back(0.05 * i);
    }
    return out;
}

NoiseReport label_noise_eval(const TaskData& data, ModelKind kind, std::span<const double> levels,
                             std::size_t repeats, std::uint64_t seed, const ebm::TrainConfig& config) {
    if (repeats == 0) {
        throw InvalidInput("repeats must be at least 1");
    }
    NoiseReport report;
    report.task = data.task;
    report.kind = kind;
    const std::size_t n = data.size();
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const double p = levels[li];
        if (!(p > 0.0 && p <= 1.0)) {
            throw InvalidInput("noise levels must lie in (0, 1]");
        }
        // p * n can land just below an integer in binary floating point
        const auto m = static_cast<std::size_t>(std::floor(p * double(n) + 1e-9));
        if (m == 0) {
            report.warnings.push_back("noise level " + std::to_string(p) + " flips no record; skipped");
            continue;
        }
        NoiseLevelResult result;
        result.level = p;
        result.flipped = m;
        for (std::size_t r = 0; r < repeats; ++r) {
            const std::uint64_t run_seed = derive_seed(derive_seed(seed, li), r);
            Rng rng(run_seed);
            const auto perm = permutation(n, rng);
            std::vector<int> noisy = data.labels;
            for (std::size_t j = 0; j < m; ++j) {
                noisy[perm[j]] = 1 - noisy[perm[j]];
            }
            ebm::TrainConfig run_config = config;
            run_config.seed = run_seed;
            Classifier model(kind, run_config);
            model.train(data, all_rows, noisy);
            std::size_t correct = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (model.predict(data, perm[j]) == data.labels[perm[j]]) {
                    ++correct;
                }
            }
            result.accuracies.push_back(double(correct) / double(m));
        }
        result.mean_accuracy =
            std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) / double(repeats);
        report.levels.push_back(std::move(result));
    }
    return report;
}

} // namespace xlabel::experiments
