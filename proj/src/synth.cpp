#include "xlabel/errors.hpp"
#include "xlabel/ncd.hpp"
#include "xlabel/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace xlabel::ncd {

namespace {

// None of these contain a keyword of any task, case-insensitively.
constexpr std::array<std::string_view, 12> kFiller{
    "follow up visit",  "refill prescription", "no complaint",    "stable condition",
    "routine check up", "advised exercise",    "mild cough",      "knee pain",
    "sleeps well",      "appetite good",       "plan: continue",  "next visit in 3 months",
};

// Misspellings that no longer match any keyword.
std::string_view typo_of(std::string_view keyword) {
    static const std::array<std::pair<std::string_view, std::string_view>, 11> kTypos{{
        {"DM", "DN"},
        {"diabetes", "diabtes"},
        {"T1D", "T1"},
        {"T2D", "T2"},
        {"HT", "HN"},
        {"hypertension", "hypertensoin"},
        {"bisoprolol", "bisoprolo"},
        {"CKD", "CDK"},
        {"DLP", "DPL"},
        {"dyslipid", "dislipid"},
        {"statin", "staten"},
    }};
    for (const auto& [word, typo] : kTypos) {
        if (word == keyword) {
            return typo;
        }
    }
    return "";
}

constexpr std::array<std::array<std::string_view, 3>, kTaskCount> kIcdCodes{{
    {"E11.9", "E11.65", "E10.9"},
    {"I10", "I11.9", "I10"},
    {"N18.3", "N18.4", "N18.5"},
    {"E78.5", "E78.0", "E78.2"},
}};
constexpr std::array<std::string_view, 6> kOtherCodes{"J06.9", "M17.1", "K21.9", "R51", "Z00.0", "L30.9"};
constexpr std::array<std::string_view, 5> kOtherDrugs{"paracetamol", "omeprazole", "cetirizine",
                                                      "ibuprofen", "vitamin b complex"};

template <typename Seq>
auto pick(const Seq& seq, Rng& rng) -> decltype(seq[0]) {
    return seq[uniform_index(rng, seq.size())];
}

double clamped_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    return std::clamp(mean + sd * standard_normal(rng), lo, hi);
}

double round_to(double v, double step) { return std::round(v / step) * step; }

// Exactly k members, drawn with probability proportional to weight
// (Efraimidis-Spirakis keys).
std::vector<int> weighted_exact(const std::vector<double>& weights, std::size_t k, Rng& rng) {
    std::vector<std::pair<double, std::size_t>> keys;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double u = uniform_real(rng);
        while (u <= 0.0) {
            u = uniform_real(rng);
        }
        keys.emplace_back(std::log(u) / weights[i], i);
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<int> out(weights.size(), 0);
    for (std::size_t j = 0; j < k; ++j) {
        out[keys[j].second] = 1;
    }
    return out;
}

// Chance that a positive record shows each indicator, per task. DM and DLP
// patients are on steady medication and consistently coded; HTN and CKD are
// more often visible only in labs or not documented at all.
struct IndicatorRates {
    double key;
    double icd;
    double drug;
    double lab;
};
constexpr std::array<IndicatorRates, kTaskCount> kIndicatorRates{{
    {0.9, 0.9, 0.9, 0.6},
    {0.75, 0.8, 0.75, 0.6},
    {0.75, 0.8, 0.75, 0.6},
    {0.85, 0.85, 0.9, 0.6},
}};

struct Indicators {
    bool key = false;
    bool icd = false;
    bool drug = false;
    bool lab = false;  // disease-range lab value
};

} // namespace

void SynthConfig::validate() const {
    if (n_records == 0) {
        throw InvalidInput("n_records must be at least 1");
    }
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    for (const double r : class_rates) {
        if (!in_unit(r)) {
            throw InvalidInput("class rates must lie in [0, 1]");
        }
    }
    if (!in_unit(dropout_rate) || !in_unit(typo_rate) || !in_unit(flag_noise)) {
        throw InvalidInput("noise rates must lie in [0, 1]");
    }
}

SynthDataset synth_generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const std::size_t n = config.n_records;
    const auto& lists = ClinicalLists::defaults();

    SynthDataset data;
    auto positives = [&](Task t) {
        return static_cast<std::size_t>(std::llround(config.class_rates[index_of(t)] * static_cast<double>(n)));
    };
    // DM and HTN independent; CKD leans on DM/HTN, DLP on DM.
    const std::vector<double> flat(n, 1.0);
    data.labels[index_of(Task::DM)] = weighted_exact(flat, positives(Task::DM), rng);
    data.labels[index_of(Task::HTN)] = weighted_exact(flat, positives(Task::HTN), rng);
    std::vector<double> ckd_w(n);
    std::vector<double> dlp_w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int dm = data.labels[index_of(Task::DM)][i];
        const int htn = data.labels[index_of(Task::HTN)][i];
        ckd_w[i] = 1.0 + 2.0 * dm + 2.0 * htn;
        dlp_w[i] = 1.0 + 2.0 * dm;
    }
    data.labels[index_of(Task::CKD)] = weighted_exact(ckd_w, positives(Task::CKD), rng);
    data.labels[index_of(Task::DLP)] = weighted_exact(dlp_w, positives(Task::DLP), rng);

    for (std::size_t i = 0; i < n; ++i) {
        RawRecord r;
        r.id = "P" + std::to_string(100000 + i);
        r.age = std::round(clamped_normal(rng, 55.0, 14.0, 18.0, 95.0));
        r.sex = bernoulli(rng, 0.5) ? "F" : "M";
        r.height = round_to(clamped_normal(rng, r.sex == "F" ? 156.0 : 168.0, 7.0, 135.0, 200.0), 0.5);
        r.weight = round_to(clamped_normal(rng, r.sex == "F" ? 58.0 : 68.0, 11.0, 35.0, 150.0), 0.1);
        const bool minor_visit = bernoulli(rng, config.dropout_rate);

        std::array<Indicators, kTaskCount> ind{};
        for (const Task t : kChainOrder) {
            if (data.labels[index_of(t)][i] == 0) {
                continue;
            }
            Indicators& x = ind[index_of(t)];
            const IndicatorRates& rate = kIndicatorRates[index_of(t)];
            x.key = bernoulli(rng, rate.key);
            x.icd = !minor_visit && bernoulli(rng, rate.icd);
            x.drug = bernoulli(rng, rate.drug);
            x.lab = !minor_visit && bernoulli(rng, rate.lab);
            if (!x.key && !x.icd && !x.drug && !x.lab) {
                (bernoulli(rng, 0.5) ? x.key : x.drug) = true;
            }
        }
        const std::array<bool, kTaskCount> lab_signal{ind[0].lab, ind[1].lab, ind[2].lab, ind[3].lab};
        for (auto& x : ind) {
            if (bernoulli(rng, config.flag_noise)) {
                x.key = !x.key;
            }
            if (bernoulli(rng, config.flag_noise)) {
                x.icd = !x.icd;
            }
            if (bernoulli(rng, config.flag_noise)) {
                x.drug = !x.drug;
            }
        }

        // labs: normal range unless the disease shows in this lab
        if (!minor_visit) {
            if (bernoulli(rng, 0.9)) {
                r.lab(Lab::Glucose) = std::round(lab_signal[index_of(Task::DM)]
                                                     ? clamped_normal(rng, 165.0, 30.0, 126.0, 400.0)
                                                     : clamped_normal(rng, 96.0, 10.0, 70.0, 125.0));
            }
            if (bernoulli(rng, 0.6) || lab_signal[index_of(Task::DM)]) {
                r.lab(Lab::HbA1c) = round_to(lab_signal[index_of(Task::DM)] ? clamped_normal(rng, 7.9, 1.0, 6.5, 13.0)
                                                                             : clamped_normal(rng, 5.4, 0.35, 4.3, 6.4),
                                             0.1);
            }
            if (bernoulli(rng, 0.8) || lab_signal[index_of(Task::CKD)]) {
                r.lab(Lab::eGFR) = round_to(lab_signal[index_of(Task::CKD)] ? clamped_normal(rng, 42.0, 11.0, 6.0, 59.5)
                                                                             : clamped_normal(rng, 92.0, 14.0, 61.0, 130.0),
                                            0.5);
            }
            if (bernoulli(rng, 0.95) || lab_signal[index_of(Task::HTN)]) {
                if (lab_signal[index_of(Task::HTN)]) {
                    r.lab(Lab::Sbp1) = std::round(clamped_normal(rng, 152.0, 9.0, 140.0, 200.0));
                    r.lab(Lab::Dbp1) = std::round(clamped_normal(rng, 88.0, 8.0, 60.0, 120.0));
                } else {
                    r.lab(Lab::Sbp1) = std::round(clamped_normal(rng, 121.0, 9.0, 95.0, 139.0));
                    r.lab(Lab::Dbp1) = std::round(clamped_normal(rng, 76.0, 6.0, 55.0, 89.0));
                }
            }
            if (bernoulli(rng, 0.6) || lab_signal[index_of(Task::DLP)]) {
                r.lab(Lab::LdlC) = std::round(lab_signal[index_of(Task::DLP)] ? clamped_normal(rng, 185.0, 18.0, 160.0, 260.0)
                                                                               : clamped_normal(rng, 112.0, 20.0, 50.0, 159.0));
            }
        }

        std::vector<std::string> note_parts{std::string(pick(kFiller, rng))};
        for (const Task t : kChainOrder) {
            const Indicators& x = ind[index_of(t)];
            if (x.key) {
                const auto& keyword = pick(lists.keywords[index_of(t)], rng);
                std::string written = keyword;
                if (bernoulli(rng, config.typo_rate)) {
                    written = std::string(typo_of(keyword));
                } else if (bernoulli(rng, 0.3)) {
                    std::transform(written.begin(), written.end(), written.begin(),
                                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
                }
                note_parts.push_back("known " + written);
            }
            if (x.icd) {
                r.icd10_codes.emplace_back(pick(kIcdCodes[index_of(t)], rng));
            }
            if (x.drug) {
                r.drugs.push_back(pick(lists.drugs[index_of(t)], rng));
            }
        }
        if (bernoulli(rng, 0.3)) {
            r.icd10_codes.emplace_back(pick(kOtherCodes, rng));
        }
        if (bernoulli(rng, 0.4)) {
            r.drugs.emplace_back(pick(kOtherDrugs, rng));
        }
        if (bernoulli(rng, 0.5)) {
            note_parts.emplace_back(pick(kFiller, rng));
        }
        std::sort(r.icd10_codes.begin(), r.icd10_codes.end());
        r.icd10_codes.erase(std::unique(r.icd10_codes.begin(), r.icd10_codes.end()), r.icd10_codes.end());
        for (std::size_t k = 0; k < note_parts.size(); ++k) {
            r.note += (k == 0 ? "" : ", ") + note_parts[k];
        }
        data.records.push_back(std::move(r));
    }
    return data;
}

RecordTable to_table(const SynthDataset& data) {
    RecordTable table;
    table.records = data.records;
    for (const Task t : kChainOrder) {
        table.has_label_column[index_of(t)] = true;
        for (const int y : data.labels[index_of(t)]) {
            table.labels[index_of(t)].emplace_back(y);
        }
    }
    return table;
}

} // namespace xlabel::ncd
