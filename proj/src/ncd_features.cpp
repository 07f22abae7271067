#include "xlabel/errors.hpp"
#include "xlabel/ncd.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <utility>

namespace xlabel::ncd {

namespace {

constexpr std::string_view kDefaultLists = R"(# Clinical lists used for note keywords, ICD-10 code prefixes and drugs.
# One line per <kind>.<TASK>; items are comma separated.

keywords.DM = DM, diabetes, T1D, T2D
keywords.HTN = HT, hypertension, bisoprolol
keywords.CKD = CKD
keywords.DLP = DLP, dyslipid, statin

icd10.DM = E10, E11, E12, E13, E14
icd10.HTN = I10, I11, I12, I13, I15
icd10.CKD = N18
icd10.DLP = E78

drugs.DM = metformin, glipizide, gliclazide, glibenclamide, pioglitazone, sitagliptin, vildagliptin, empagliflozin, dapagliflozin, insulin
drugs.HTN = amlodipine, enalapril, losartan, valsartan, hydrochlorothiazide, atenolol, bisoprolol, nifedipine, carvedilol
drugs.CKD = sodium bicarbonate, calcium carbonate, sevelamer, calcitriol, erythropoietin
drugs.DLP = simvastatin, atorvastatin, rosuvastatin, pravastatin, ezetimibe, fenofibrate, gemfibrozil
)";

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string normalize_code(std::string_view code) {
    std::string out;
    for (const char c : code) {
        if (c != '.' && !std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

enum class FeatureKind { Key, Icd10, Drugs, Lab, Pred };

struct FeatureSpec {
    FeatureKind kind;
    Task task;  // Key / Icd10 / Drugs / Pred
    Lab lab;    // Lab
};

const std::array<std::vector<FeatureSpec>, kTaskCount>& schema_specs() {
    static const std::array<std::vector<FeatureSpec>, kTaskCount> specs = [] {
        auto flags = [](Task t) {
            return std::vector<FeatureSpec>{{FeatureKind::Key, t, Lab::Glucose},
                                            {FeatureKind::Icd10, t, Lab::Glucose},
                                            {FeatureKind::Drugs, t, Lab::Glucose}};
        };
        auto lab = [](Lab l) { return FeatureSpec{FeatureKind::Lab, Task::DM, l}; };
        auto pred = [](Task t) { return FeatureSpec{FeatureKind::Pred, t, Lab::Glucose}; };

        std::array<std::vector<FeatureSpec>, kTaskCount> s;
        s[index_of(Task::DM)] = flags(Task::DM);
        s[index_of(Task::DM)].insert(s[index_of(Task::DM)].end(), {lab(Lab::Glucose), lab(Lab::HbA1c), lab(Lab::eGFR)});
        s[index_of(Task::HTN)] = flags(Task::HTN);
        s[index_of(Task::HTN)].insert(s[index_of(Task::HTN)].end(), {lab(Lab::Sbp1), lab(Lab::Dbp1)});
        s[index_of(Task::CKD)] = flags(Task::CKD);
        s[index_of(Task::CKD)].insert(s[index_of(Task::CKD)].end(),
                                      {pred(Task::DM), pred(Task::HTN), lab(Lab::eGFR)});
        s[index_of(Task::DLP)] = flags(Task::DLP);
        s[index_of(Task::DLP)].insert(s[index_of(Task::DLP)].end(), {lab(Lab::Glucose), pred(Task::DM),
                                                                     pred(Task::HTN), pred(Task::CKD),
                                                                     lab(Lab::LdlC)});
        return s;
    }();
    return specs;
}

std::string spec_name(const FeatureSpec& spec) {
    const std::string task(to_string(spec.task));
    switch (spec.kind) {
    case FeatureKind::Key:
        return task + "_key";
    case FeatureKind::Icd10:
        return task + "_ICD10";
    case FeatureKind::Drugs:
        return task + "_drugs";
    case FeatureKind::Lab:
        return std::string(to_string(spec.lab));
    case FeatureKind::Pred:
        return task + "_pred";
    }
    return {};
}

} // namespace

std::string_view to_string(Task t) {
    switch (t) {
    case Task::DM:
        return "DM";
    case Task::HTN:
        return "HTN";
    case Task::CKD:
        return "CKD";
    case Task::DLP:
        return "DLP";
    }
    return "?";
}

Task parse_task(std::string_view name) {
    for (const Task t : kChainOrder) {
        if (to_string(t) == name) {
            return t;
        }
    }
    throw InvalidInput("unknown task '" + std::string(name) + "' (expected DM, HTN, CKD or DLP)");
}

std::string_view to_string(Lab lab) {
    switch (lab) {
    case Lab::Glucose:
        return "Glucose";
    case Lab::HbA1c:
        return "HbA1c";
    case Lab::eGFR:
        return "eGFR";
    case Lab::Sbp1:
        return "sbp1";
    case Lab::Dbp1:
        return "dbp1";
    case Lab::LdlC:
        return "LDL-c";
    }
    return "?";
}

ClinicalLists parse_clinical_lists(std::string_view text) {
    ClinicalLists lists;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        const auto dot = line.find('.');
        if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
            throw InvalidInput("clinical lists line " + std::to_string(line_no) + ": expected '<kind>.<TASK> = items'");
        }
        const auto kind = trim(line.substr(0, dot));
        const Task task = parse_task(trim(line.substr(dot + 1, eq - dot - 1)));
        std::vector<std::string> items;
        std::string_view rest = line.substr(eq + 1);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (!item.empty()) {
                items.emplace_back(item);
            }
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (kind == "keywords") {
            lists.keywords[index_of(task)] = std::move(items);
        } else if (kind == "icd10") {
            lists.icd10_prefixes[index_of(task)] = std::move(items);
        } else if (kind == "drugs") {
            lists.drugs[index_of(task)] = std::move(items);
        } else {
            throw InvalidInput("clinical lists line " + std::to_string(line_no) + ": unknown kind '" +
                               std::string(kind) + "'");
        }
    }
    for (const Task t : kChainOrder) {
        if (lists.keywords[index_of(t)].empty()) {
            throw InvalidInput("clinical lists: no keywords for " + std::string(to_string(t)));
        }
    }
    return lists;
}

ClinicalLists load_clinical_lists(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot read clinical lists from " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_clinical_lists(buf.str());
}

const ClinicalLists& ClinicalLists::defaults() {
    static const ClinicalLists lists = parse_clinical_lists(kDefaultLists);
    return lists;
}

const std::vector<std::string>& feature_names(Task task) {
    static const std::array<std::vector<std::string>, kTaskCount> names = [] {
        std::array<std::vector<std::string>, kTaskCount> out;
        for (const Task t : kChainOrder) {
            for (const auto& spec : schema_specs()[index_of(t)]) {
                out[index_of(t)].push_back(spec_name(spec));
            }
        }
        return out;
    }();
    return names[index_of(task)];
}

std::vector<Task> upstream_tasks(Task task) {
    std::vector<Task> out;
    for (const auto& spec : schema_specs()[index_of(task)]) {
        if (spec.kind == FeatureKind::Pred) {
            out.push_back(spec.task);
        }
    }
    return out;
}

KeywordMatch keyword_match(std::string_view note, Task task, const ClinicalLists& lists) {
    KeywordMatch match;
    const std::string haystack = lower(note);
    for (const auto& keyword : lists.keywords[index_of(task)]) {
        const std::string needle = lower(keyword);
        if (needle.empty()) {
            continue;
        }
        std::size_t pos = haystack.find(needle);
        while (pos != std::string::npos) {
            match.spans.push_back({pos, pos + needle.size()});
            pos = haystack.find(needle, pos + needle.size());
        }
    }
    std::sort(match.spans.begin(), match.spans.end(),
              [](const Span& a, const Span& b) { return a.start != b.start ? a.start < b.start : a.end < b.end; });
    match.spans.erase(std::unique(match.spans.begin(), match.spans.end()), match.spans.end());
    match.flag = match.spans.empty() ? 0 : 1;
    return match;
}

bool has_icd10(const RawRecord& record, Task task, const ClinicalLists& lists) {
    for (const auto& code : record.icd10_codes) {
        const std::string c = normalize_code(code);
        for (const auto& prefix : lists.icd10_prefixes[index_of(task)]) {
            const std::string p = normalize_code(prefix);
            if (!p.empty() && c.compare(0, p.size(), p) == 0) {
                return true;
            }
        }
    }
    return false;
}

bool has_drug(const RawRecord& record, Task task, const ClinicalLists& lists) {
    for (const auto& drug : record.drugs) {
        const std::string d = lower(drug);
        for (const auto& known : lists.drugs[index_of(task)]) {
            if (d.find(lower(known)) != std::string::npos) {
                return true;
            }
        }
    }
    return false;
}

ebm::FeatureVector extract_features(const RawRecord& record, Task task, const UpstreamPredictions& upstream,
                                    const ClinicalLists& lists) {
    ebm::FeatureVector x;
    const auto& specs = schema_specs()[index_of(task)];
    x.reserve(specs.size());
    for (const auto& spec : specs) {
        switch (spec.kind) {
        case FeatureKind::Key:
            x.push_back(keyword_match(record.note, spec.task, lists).flag);
            break;
        case FeatureKind::Icd10:
            x.push_back(has_icd10(record, spec.task, lists) ? 1.0 : 0.0);
            break;
        case FeatureKind::Drugs:
            x.push_back(has_drug(record, spec.task, lists) ? 1.0 : 0.0);
            break;
        case FeatureKind::Lab: {
            const auto& v = record.lab(spec.lab);
            x.push_back(v ? *v : ebm::kMissing);
            break;
        }
        case FeatureKind::Pred: {
            const auto it = upstream.find(spec.task);
            if (it == upstream.end()) {
                throw ChainOrderError(std::string(to_string(task)) + " needs the " +
                                      std::string(to_string(spec.task)) + " prediction first");
            }
            x.push_back(it->second == 1 ? 1.0 : 0.0);
            break;
        }
        }
    }
    return x;
}

int rule_based_classify(const RawRecord& record, Task task, const UpstreamPredictions& /*upstream*/,
                        const ClinicalLists& lists) {
    if (keyword_match(record.note, task, lists).flag == 1 || has_icd10(record, task, lists) ||
        has_drug(record, task, lists)) {
        return 1;
    }
    auto at_least = [&](Lab lab, double cut) {
        const auto& v = record.lab(lab);
        return v.has_value() && *v >= cut;
    };
    switch (task) {
    case Task::DM:
        return at_least(Lab::HbA1c, 6.5) || at_least(Lab::Glucose, 126.0) ? 1 : 0;
    case Task::HTN:
        return at_least(Lab::Sbp1, 140.0) || at_least(Lab::Dbp1, 90.0) ? 1 : 0;
    case Task::CKD: {
        const auto& egfr = record.lab(Lab::eGFR);
        return egfr.has_value() && *egfr < 60.0 ? 1 : 0;
    }
    case Task::DLP:
        return at_least(Lab::LdlC, 160.0) ? 1 : 0;
    }
    return 0;
}

std::map<Task, TaskPrediction> chain_predict(const TaskChain& chain, const RawRecord& record,
                                             std::span<const Task> order, const ClinicalLists& lists) {
    if (!std::equal(order.begin(), order.end(), kChainOrder.begin(), kChainOrder.end())) {
        throw ChainOrderError("tasks must be evaluated in the order DM, HTN, CKD, DLP");
    }
    std::map<Task, TaskPrediction> out;
    UpstreamPredictions upstream;
    for (const Task t : order) {
        const auto& model = chain.models[index_of(t)];
        if (!model) {
            throw ChainOrderError("no trained model for " + std::string(to_string(t)));
        }
        TaskPrediction pred;
        pred.features = extract_features(record, t, upstream, lists);
        pred.p = model->predict_proba(pred.features);
        pred.pseudo_label = model->predict_label(pred.features);
        pred.heat = model->heat(pred.features);
        upstream[t] = pred.pseudo_label;
        out.emplace(t, std::move(pred));
    }
    return out;
}

} // namespace xlabel::ncd
