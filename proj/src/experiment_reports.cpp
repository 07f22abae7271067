#include "xlabel/csv.hpp"
#include "xlabel/experiments.hpp"

#include "json.hpp"

namespace xlabel::experiments {

namespace {

using nlohmann::ordered_json;
using csv::format_number;

std::string task_name(ncd::Task t) { return std::string(ncd::to_string(t)); }

ordered_json metric_json(const MetricSet& m) {
    return {{"f1", m.f1}, {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}};
}

std::string metric_fields(const MetricSet& m) {
    return format_number(m.f1) + "," + format_number(m.accuracy) + "," + format_number(m.precision) + "," +
           format_number(m.recall);
}

} // namespace

std::string flips_csv(const FlipsReport& report) {
    std::string out = "task,repetition,total_flips,initial_count,predicted,degenerate_steps,baseline\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const auto& r = report.runs[i];
        out += task_name(report.task) + "," + std::to_string(i + 1) + "," + std::to_string(r.total_flips) + "," +
               std::to_string(r.initial_count) + "," + std::to_string(r.predicted) + "," +
               std::to_string(r.degenerate_steps) + "," + std::to_string(report.baseline) + "\n";
    }
    return out;
}

std::string flips_json(const FlipsReport& report) {
    ordered_json j;
    j["task"] = task_name(report.task);
    j["baseline"] = report.baseline;
    j["repetitions"] = report.runs.size();
    j["median"] = report.median();
    j["mean"] = report.mean();
    auto& hist = j["histogram"] = ordered_json::array();
    for (const auto& [flips, count] : report.histogram) {
        hist.push_back({{"total_flips", flips}, {"count", count}});
    }
    auto& runs = j["total_flips"] = ordered_json::array();
    for (const auto& r : report.runs) {
        runs.push_back(r.total_flips);
    }
    return j.dump(2) + "\n";
}

std::string cv_csv(std::span<const CvReport> reports) {
    std::string out = "task,model,fold,f1,accuracy,precision,recall,tp,fp,tn,fn,degenerate\n";
    for (const auto& rep : reports) {
        for (std::size_t f = 0; f < rep.folds.size(); ++f) {
            const auto& fold = rep.folds[f];
            const auto& c = fold.confusion;
            out += task_name(rep.task) + "," + std::string(to_string(rep.kind)) + "," + std::to_string(f + 1) + "," +
                   metric_fields(fold.metrics) + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
                   std::to_string(c.tn) + "," + std::to_string(c.fn) + "," + (fold.degenerate ? "1" : "0") + "\n";
        }
    }
    return out;
}

std::string cv_json(std::span<const CvReport> reports) {
    ordered_json j = ordered_json::array();
    for (const auto& rep : reports) {
        ordered_json folds = ordered_json::array();
        for (const auto& f : rep.folds) {
            auto m = metric_json(f.metrics);
            m["degenerate"] = f.degenerate;
            folds.push_back(std::move(m));
        }
        j.push_back({{"task", task_name(rep.task)},
                     {"model", to_string(rep.kind)},
                     {"mean", metric_json(rep.mean)},
                     {"sd", metric_json(rep.sd)},
                     {"folds", std::move(folds)},
                     {"warnings", rep.warnings}});
    }
    return j.dump(2) + "\n";
}

std::string noise_csv(std::span<const NoiseReport> reports) {
    std::string out = "task,model,level,flipped,repeat,accuracy\n";
    for (const auto& rep : reports) {
        for (const auto& level : rep.levels) {
            for (std::size_t r = 0; r < level.accuracies.size(); ++r) {
                out += task_name(rep.task) + "," + std::string(to_string(rep.kind)) + "," + format_number(level.level) +
                       "," + std::to_string(level.flipped) + "," + std::to_string(r + 1) + "," +
                       format_number(level.accuracies[r]) + "\n";
            }
        }
    }
    return out;
}

std::string noise_json(std::span<const NoiseReport> reports) {
    ordered_json j = ordered_json::array();
    for (const auto& rep : reports) {
        ordered_json levels = ordered_json::array();
        for (const auto& level : rep.levels) {
            levels.push_back({{"level", level.level},
                              {"flipped", level.flipped},
                              {"mean_accuracy", level.mean_accuracy},
                              {"accuracies", level.accuracies}});
        }
        j.push_back({{"task", task_name(rep.task)},
                     {"model", to_string(rep.kind)},
                     {"levels", std::move(levels)},
                     {"warnings", rep.warnings}});
    }
    return j.dump(2) + "\n";
}

} // namespace xlabel::experiments
