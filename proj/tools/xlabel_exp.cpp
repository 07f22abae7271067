// Runs the labeling-effort, cross-validation and label-noise experiments on a
// record CSV and writes CSV + JSON reports.

#include "xlabel/errors.hpp"
#include "xlabel/experiments.hpp"
#include "xlabel/ncd.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace xlabel;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    std::cout << "wrote " << path.string() << "\n";
}

std::vector<experiments::ModelKind> parse_models(const std::vector<std::string>& names) {
    std::vector<experiments::ModelKind> out;
    for (const auto& n : names) {
        out.push_back(experiments::parse_model_kind(n));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"xlabel-exp: labeling experiments on synthetic or uploaded records"};
    app.require_subcommand(1);

    std::string data;
    std::string task_name;
    std::uint64_t seed = 0;
    std::string out = "reports";
    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--data", data, "record CSV with label columns")->required()->check(CLI::ExistingFile);
        cmd->add_option("--task", task_name, "DM, HTN, CKD or DLP")
            ->required()
            ->check(CLI::IsMember({"DM", "HTN", "CKD", "DLP"}));
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--out", out, "report directory")->capture_default_str();
    };

    ncd::SynthConfig synth;
    std::string synth_out = "synthetic.csv";
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic record CSV");
    synth_cmd->add_option("--n", synth.n_records, "number of records")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "random seed");
    synth_cmd->add_option("--flag-noise", synth.flag_noise, "misfire rate of keyword/ICD-10/drug flags")
        ->capture_default_str();
    synth_cmd->add_option("--typo-rate", synth.typo_rate, "rate of misspelled note keywords")->capture_default_str();
    synth_cmd->add_option("--dropout", synth.dropout_rate, "rate of minor visits without labs or codes")
        ->capture_default_str();
    synth_cmd->add_option("--out", synth_out, "output CSV")->capture_default_str();

    experiments::SimConfig sim;
    auto* flips_cmd = app.add_subcommand("totalflips", "simulate the labeling loop and count corrections");
    common(flips_cmd);
    flips_cmd->add_option("--initial-fraction", sim.initial_fraction, "share revealed before the first fit")
        ->capture_default_str();
    flips_cmd->add_option("--batch-size", sim.batch_size, "records revealed per step")->capture_default_str();
    flips_cmd->add_option("--repetitions", sim.repetitions, "independent runs")->capture_default_str();
    flips_cmd->add_flag("--confidence-ordered", sim.confidence_ordered,
                        "reveal least confident records first instead of random batches");

    std::size_t k = 5;
    std::vector<std::string> models{"EBM", "RuleBased", "AllNegative"};
    auto* cv_cmd = app.add_subcommand("cv", "stratified k-fold metrics");
    common(cv_cmd);
    cv_cmd->add_option("--k", k, "number of folds")->capture_default_str();
    cv_cmd->add_option("--models", models, "EBM, RuleBased and/or AllNegative")->capture_default_str();

    std::size_t repeats = 10;
    std::vector<double> levels = experiments::default_noise_levels();
    auto* noise_cmd = app.add_subcommand("noise", "accuracy on deliberately flipped labels");
    common(noise_cmd);
    noise_cmd->add_option("--repeats", repeats, "resamples per level")->capture_default_str();
    noise_cmd->add_option("--levels", levels, "fractions of labels to flip");
    noise_cmd->add_option("--models", models, "EBM, RuleBased and/or AllNegative")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            write_file(synth_out, ncd::write_records_csv(ncd::to_table(ncd::synth_generate(synth))));
            return 0;
        }
        const auto task = ncd::parse_task(task_name);
        const auto data_set = experiments::make_task_data(ncd::read_records_csv(read_file(data)), task);
        const fs::path dir(out);

        if (flips_cmd->parsed()) {
            sim.seed = seed;
            const auto report = experiments::simulate_totalflips(data_set, sim);
            write_file(dir / ("totalflips_" + task_name + ".csv"), experiments::flips_csv(report));
            write_file(dir / ("totalflips_" + task_name + ".json"), experiments::flips_json(report));
            std::cout << task_name << ": median TotalFlips " << report.median() << " (all-negative baseline "
                      << report.baseline << ")\n";
        } else if (cv_cmd->parsed()) {
            std::vector<experiments::CvReport> reports;
            for (const auto kind : parse_models(models)) {
                reports.push_back(experiments::kfold_cv(data_set, kind, k, seed));
                for (const auto& w : reports.back().warnings) {
                    std::cerr << "warning: " << w << "\n";
                }
                std::cout << task_name << " " << experiments::to_string(kind) << ": mean F1 "
                          << reports.back().mean.f1 << "\n";
            }
            write_file(dir / ("cv_" + task_name + ".csv"), experiments::cv_csv(reports));
            write_file(dir / ("cv_" + task_name + ".json"), experiments::cv_json(reports));
        } else if (noise_cmd->parsed()) {
            std::vector<experiments::NoiseReport> reports;
            for (const auto kind : parse_models(models)) {
                reports.push_back(experiments::label_noise_eval(data_set, kind, levels, repeats, seed));
                for (const auto& w : reports.back().warnings) {
                    std::cerr << "warning: " << w << "\n";
                }
            }
            write_file(dir / ("noise_" + task_name + ".csv"), experiments::noise_csv(reports));
            write_file(dir / ("noise_" + task_name + ".json"), experiments::noise_json(reports));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
