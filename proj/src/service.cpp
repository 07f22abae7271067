#include "xlabel/service.hpp"

#include "xlabel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace xlabel::service {

using labeling::Action;
using labeling::Decision;
using labeling::LabelStore;
using labeling::Provenance;
using ncd::Task;

namespace fs = std::filesystem;

double round_for_wire(double v) {
    const double scale = std::pow(10.0, kWireDecimals);
    return std::round(v * scale) / scale;
}

namespace {

Json number_or_null(double v) { return ebm::is_missing(v) ? Json(nullptr) : Json(v); }

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json sampling_json(const labeling::SamplingMethod& m) {
    if (const auto* t = std::get_if<labeling::Threshold>(&m)) {
        return {{"method", "threshold"}, {"t", t->t}};
    }
    return {{"method", "n_least"}, {"n", std::get<labeling::NLeast>(m).n}};
}

labeling::SamplingMethod parse_sampling(const Json& j) {
    if (!j.is_object()) {
        throw InvalidInput("sampling must be an object");
    }
    const auto method = j.value("method", std::string{});
    labeling::SamplingMethod m;
    if (method == "threshold") {
        m = labeling::Threshold{j.value("t", 0.8)};
    } else if (method == "n_least") {
        const auto n = j.value("n", std::int64_t{20});
        if (n <= 0) {
            throw InvalidInput("n must be positive");
        }
        m = labeling::NLeast{static_cast<std::size_t>(n)};
    } else {
        throw InvalidInput("sampling method must be 'threshold' or 'n_least'");
    }
    labeling::validate(m);
    return m;
}

Action parse_action(const std::string& s) {
    if (s == "keep") {
        return Action::Keep;
    }
    if (s == "flip") {
        return Action::Flip;
    }
    if (s == "set") {
        return Action::Set;
    }
    throw InvalidInput("action must be keep, flip or set, found '" + s + "'");
}

std::string_view action_name(Action a) {
    switch (a) {
    case Action::Keep:
        return "keep";
    case Action::Flip:
        return "flip";
    case Action::Set:
        return "set";
    }
    return "";
}

Json stored_label_json(const LabelStore& store, std::size_t i) {
    return store.is_labeled(i) ? Json(labeling::label_to_int(store.label(i))) : Json(nullptr);
}

Json raw_fields(const ncd::RawRecord& r) {
    Json f;
    f["age"] = optional_json(r.age);
    f["sex"] = r.sex;
    f["height"] = optional_json(r.height);
    f["weight"] = optional_json(r.weight);
    for (const auto lab : ncd::kAllLabs) {
        f[std::string(ncd::to_string(lab))] = optional_json(r.lab(lab));
    }
    f["icd10"] = r.icd10_codes;
    f["drugs"] = r.drugs;
    return f;
}

void write_atomically(const fs::path& path, std::string_view text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t numeric_suffix(const std::string& id) {
    if (id.size() < 2) {
        return 0;
    }
    try {
        return std::stoull(id.substr(1));
    } catch (const std::exception&) {
        return 0;
    }
}

Json training_json(const LabelStore& store, const ebm::EbmModel* model) {
    Json j;
    const auto labeled = store.labeled();
    j["labeled"] = labeled.size();
    if (model == nullptr || labeled.empty()) {
        j["log_loss"] = nullptr;
        j["accuracy"] = nullptr;
        return j;
    }
    std::vector<ebm::FeatureVector> x;
    std::vector<int> y;
    std::size_t correct = 0;
    for (const std::size_t i : labeled) {
        x.push_back(store.features(i));
        y.push_back(labeling::label_to_int(store.label(i)));
        correct += model->predict_label(x.back()) == y.back() ? 1 : 0;
    }
    j["log_loss"] = ebm::log_loss(*model, x, y);
    j["accuracy"] = double(correct) / double(labeled.size());
    return j;
}

std::shared_ptr<const ebm::EbmModel> try_fit(const LabelStore& store, const ebm::TrainConfig& config) {
    try {
        return std::make_shared<const ebm::EbmModel>(labeling::retrain(store, config));
    } catch (const DegenerateLabels&) {
        return nullptr;
    }
}

const char* const kUntrained =
    "session has no trained model yet: submit seed labels with action 'set' covering both classes";

} // namespace

Session::Session(std::string id, SessionConfig config, std::shared_ptr<const Dataset> dataset)
    : id_(std::move(id)), config_(std::move(config)), dataset_(std::move(dataset)) {}

std::shared_ptr<const SessionState> Session::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return state_;
}

void Session::publish(std::shared_ptr<const SessionState> next) {
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
}

std::vector<ebm::FeatureVector> session_features(const ncd::RecordTable& table, Task task) {
    std::vector<ebm::FeatureVector> out;
    out.reserve(table.records.size());
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        ncd::UpstreamPredictions up;
        for (const Task t : ncd::kChainOrder) {
            if (t == task) {
                break;
            }
            const auto& stored = table.has_label_column[ncd::index_of(t)] ? table.labels[ncd::index_of(t)][i]
                                                                           : std::optional<int>{};
            up[t] = stored ? *stored : ncd::rule_based_classify(table.records[i], t, up);
        }
        out.push_back(ncd::extract_features(table.records[i], task, up));
    }
    return out;
}

Service::Service(fs::path data_dir) : dir_(std::move(data_dir)) {
    fs::create_directories(dir_ / "datasets");
    fs::create_directories(dir_ / "sessions");
    load();
}

std::shared_ptr<Session> Service::session(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw NotFound("unknown session '" + id + "'");
    }
    return it->second;
}

std::shared_ptr<const Dataset> Service::dataset(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = datasets_.find(id);
    if (it == datasets_.end()) {
        throw NotFound("unknown dataset '" + id + "'");
    }
    return it->second;
}

Json Service::create_dataset(std::string_view csv_text) {
    auto ds = std::make_shared<Dataset>();
    ds->table = ncd::read_records_csv(csv_text);
    if (ds->table.records.empty()) {
        throw InvalidInput("the file holds a header but no records");
    }
    {
        std::lock_guard lock(registry_mutex_);
        ds->id = "d" + std::to_string(next_dataset_++);
        write_atomically(dir_ / "datasets" / (ds->id + ".csv"), ncd::write_records_csv(ds->table));
        datasets_[ds->id] = ds;
    }
    return dataset_summary(ds->id);
}

Json Service::dataset_summary(const std::string& dataset_id) const {
    const auto ds = dataset(dataset_id);
    const std::string csv = ncd::write_records_csv(ds->table);
    Json j;
    j["dataset_id"] = ds->id;
    j["records"] = ds->table.records.size();
    std::vector<std::string> columns;
    std::stringstream header(csv.substr(0, csv.find('\n')));
    for (std::string c; std::getline(header, c, ',');) {
        columns.push_back(c);
    }
    j["columns"] = columns;
    Json labeled = Json::object();
    Json unlabeled = Json::object();
    for (const Task t : ncd::kChainOrder) {
        const auto& col = ds->table.labels[ncd::index_of(t)];
        const auto n = static_cast<std::size_t>(
            std::count_if(col.begin(), col.end(), [](const auto& v) { return v.has_value(); }));
        labeled[std::string(ncd::to_string(t))] = n;
        unlabeled[std::string(ncd::to_string(t))] = ds->table.records.size() - n;
    }
    j["labeled"] = labeled;
    j["unlabeled"] = unlabeled;
    return j;
}

namespace {

LabelStore initial_store(const Dataset& ds, Task task) {
    std::vector<std::string> ids;
    for (const auto& r : ds.table.records) {
        ids.push_back(r.id);
    }
    LabelStore store(ncd::feature_names(task), std::move(ids), session_features(ds.table, task));
    if (ds.table.has_label_column[ncd::index_of(task)]) {
        const auto& col = ds.table.labels[ncd::index_of(task)];
        for (std::size_t i = 0; i < col.size(); ++i) {
            if (col[i]) {
                store.import_label(i, *col[i]);
            }
        }
    }
    return store;
}

Json config_json(const std::string& id, const SessionConfig& c) {
    return {{"session_id", id},
            {"dataset_id", c.dataset_id},
            {"task", ncd::to_string(c.task)},
            {"sampling", sampling_json(c.sampling)},
            {"detect_mismatches", c.detect_mismatches},
            {"auto_retrain", c.auto_retrain}};
}

SessionConfig parse_session_config(const Json& request) {
    if (!request.is_object()) {
        throw InvalidInput("request body must be a JSON object");
    }
    SessionConfig c;
    if (!request.contains("dataset_id") || !request["dataset_id"].is_string()) {
        throw InvalidInput("dataset_id is required");
    }
    c.dataset_id = request["dataset_id"].get<std::string>();
    if (!request.contains("task") || !request["task"].is_string()) {
        throw InvalidInput("task is required");
    }
    c.task = ncd::parse_task(request["task"].get<std::string>());
    if (request.contains("sampling")) {
        c.sampling = parse_sampling(request["sampling"]);
    }
    c.detect_mismatches = request.value("detect_mismatches", true);
    c.auto_retrain = request.value("auto_retrain", true);
    return c;
}

} // namespace

Json Service::create_session(const Json& request) {
    SessionConfig config = parse_session_config(request);
    const auto ds = dataset(config.dataset_id);

    auto state = std::make_shared<SessionState>();
    state->store = initial_store(*ds, config.task);
    state->model = try_fit(state->store, config.train);
    state->model_version = state->model ? 1 : 0;

    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(registry_mutex_);
        s = std::make_shared<Session>("s" + std::to_string(next_session_++), config, ds);
        const fs::path sdir = dir_ / "sessions" / s->id();
        fs::create_directories(sdir);
        write_atomically(sdir / "events.jsonl", "");
        if (state->model) {
            save_model(*s, *state);
        }
        write_atomically(sdir / "session.json", config_json(s->id(), config).dump(2) + "\n");
        s->publish(state);
        sessions_[s->id()] = s;
    }
    return session_summary(s->id());
}

Json Service::session_summary(const std::string& session_id) const {
    const auto s = session(session_id);
    const auto state = s->snapshot();
    Json j = config_json(s->id(), s->config());
    j["status"] = state->model ? "TRAINED" : "UNTRAINED";
    j["model_version"] = state->model_version;
    std::size_t human = 0;
    for (std::size_t i = 0; i < state->store.size(); ++i) {
        human += state->store.provenance(i) == Provenance::Human ? 1 : 0;
    }
    j["records"] = state->store.size();
    j["labeled"] = state->store.labeled_count();
    j["unlabeled"] = state->store.size() - state->store.labeled_count();
    j["human_labeled"] = human;
    return j;
}

std::optional<Json> Service::next_batch(const std::string& session_id) {
    const auto s = session(session_id);
    std::lock_guard write(s->write_mutex());
    const auto state = s->snapshot();
    if (!state->model) {
        throw ProtocolError(kUntrained);
    }
    const LabelStore& store = state->store;
    const ebm::EbmModel& model = *state->model;
    const Task task = s->config().task;

    std::vector<labeling::Mismatch> mismatches;
    if (s->config().detect_mismatches) {
        for (const auto& m : labeling::detect_mismatches(store, model)) {
            // a human already ruled on these
            if (store.provenance(m.index) != Provenance::Human) {
                mismatches.push_back(m);
            }
        }
    }
    const auto pool = store.unlabeled();
    if (pool.empty() && mismatches.empty()) {
        return std::nullopt;
    }
    const auto sampled = pool.empty() ? std::vector<std::size_t>{} : labeling::sample(store, model, s->config().sampling);

    std::vector<std::size_t> shown;
    std::vector<int> pseudo;
    std::vector<bool> is_mismatch;
    for (const auto& m : mismatches) {
        shown.push_back(m.index);
        pseudo.push_back(m.pseudo_label);
        is_mismatch.push_back(true);
    }
    for (const std::size_t i : sampled) {
        shown.push_back(i);
        pseudo.push_back(model.predict_label(store.features(i)));
        is_mismatch.push_back(false);
    }

    Json records = Json::array();
    for (std::size_t k = 0; k < shown.size(); ++k) {
        const std::size_t i = shown[k];
        const auto& raw = s->dataset().table.records[i];
        const auto& x = store.features(i);
        const double p = model.predict_proba(x);
        Json r;
        r["record_id"] = store.record_id(i);
        r["fields"] = raw_fields(raw);
        r["note"] = raw.note;
        Json spans = Json::array();
        for (const auto& span : ncd::keyword_match(raw.note, task).spans) {
            spans.push_back({{"start", span.start}, {"end", span.end}});
        }
        r["highlights"] = spans;
        r["pseudo_label"] = pseudo[k];
        r["p"] = p;
        r["confidence"] = labeling::confidence_from_probability(p);
        Json features = Json::array();
        const auto heat = model.heat(x);
        for (std::size_t f = 0; f < x.size(); ++f) {
            features.push_back({{"name", store.feature_names()[f]},
                                {"value", number_or_null(x[f])},
                                {"heat", round_for_wire(heat[f].value)}});
        }
        r["features"] = features;
        r["is_mismatch"] = is_mismatch[k];
        r["stored_label"] = stored_label_json(store, i);
        if (is_mismatch[k]) {
            r["suggested_label"] = pseudo[k];
        }
        records.push_back(std::move(r));
    }

    auto next = std::make_shared<SessionState>(*state);
    next->store.present(shown, pseudo);
    Json event{{"type", "present"}, {"records", Json::array()}, {"pseudo_labels", pseudo}};
    for (const std::size_t i : shown) {
        event["records"].push_back(store.record_id(i));
    }
    append_event(*s, event);
    s->publish(next);

    Json batch;
    batch["session_id"] = s->id();
    batch["task"] = ncd::to_string(task);
    batch["model_version"] = state->model_version;
    batch["mismatches"] = mismatches.size();
    batch["unlabeled_remaining"] = pool.size();
    batch["records"] = std::move(records);
    return batch;
}

Json Service::submit_labels(const std::string& session_id, const Json& request) {
    const auto s = session(session_id);
    if (!request.is_object() || !request.contains("decisions") || !request["decisions"].is_array()) {
        throw InvalidInput("request must hold a decisions array");
    }
    std::string request_id;
    if (request.contains("request_id")) {
        if (!request["request_id"].is_string()) {
            throw InvalidInput("request_id must be a string");
        }
        request_id = request["request_id"].get<std::string>();
    }

    std::lock_guard write(s->write_mutex());
    if (!request_id.empty()) {
        if (const auto it = s->replies().find(request_id); it != s->replies().end()) {
            return it->second;
        }
    }
    const auto state = s->snapshot();
    const LabelStore& store = state->store;

    std::vector<Decision> decisions;
    std::set<std::size_t> seen;
    Json logged = Json::array();
    std::size_t kept = 0;
    std::size_t flipped = 0;
    std::size_t set = 0;
    for (const auto& d : request["decisions"]) {
        if (!d.is_object() || !d.contains("record_id") || !d["record_id"].is_string()) {
            throw InvalidInput("every decision needs a record_id");
        }
        const auto id = d["record_id"].get<std::string>();
        const auto index = store.index_of(id);
        if (!index) {
            throw InvalidInput("unknown record '" + id + "'");
        }
        if (!seen.insert(*index).second) {
            throw InvalidInput("record '" + id + "' appears twice");
        }
        Decision dec;
        dec.index = *index;
        dec.action = parse_action(d.value("action", std::string{}));
        if (dec.action == Action::Set) {
            if (!d.contains("value") || !d["value"].is_number_integer()) {
                throw InvalidInput("set needs an integer value for record '" + id + "'");
            }
            dec.value = d["value"].get<int>();
        }
        (dec.action == Action::Keep ? kept : dec.action == Action::Flip ? flipped : set)++;
        decisions.push_back(dec);
        logged.push_back({{"record_id", id}, {"action", action_name(dec.action)}, {"value", dec.value}});
    }
    if (decisions.empty()) {
        throw InvalidInput("no decisions submitted");
    }

    auto next = std::make_shared<SessionState>(*state);
    next->store = labeling::apply_labels(store, decisions);
    bool changed = false;
    if (s->config().auto_retrain) {
        if (auto model = try_fit(next->store, s->config().train)) {
            next->model = std::move(model);
            ++next->model_version;
            changed = true;
        }
    }

    Json reply;
    reply["kept"] = kept;
    reply["flipped"] = flipped;
    reply["set"] = set;
    reply["model_unchanged"] = !changed;
    reply["status"] = next->model ? "TRAINED" : "UNTRAINED";
    reply["model_version"] = next->model_version;
    reply["training"] = training_json(next->store, next->model.get());

    append_event(*s, {{"type", "labels"}, {"request_id", request_id}, {"decisions", logged}, {"reply", reply}});
    if (changed) {
        save_model(*s, *next);
    }
    s->publish(next);
    if (!request_id.empty()) {
        s->replies()[request_id] = reply;
    }
    return reply;
}

Json Service::retrain(const std::string& session_id) {
    const auto s = session(session_id);
    std::lock_guard write(s->write_mutex());
    const auto state = s->snapshot();
    auto next = std::make_shared<SessionState>(*state);
    next->model = std::make_shared<const ebm::EbmModel>(labeling::retrain(state->store, s->config().train));
    ++next->model_version;
    save_model(*s, *next);
    s->publish(next);
    return {{"status", "TRAINED"},
            {"model_version", next->model_version},
            {"training", training_json(next->store, next->model.get())}};
}

std::string Service::export_csv(const std::string& session_id) const {
    const auto s = session(session_id);
    const auto state = s->snapshot();
    const Task task = s->config().task;
    ncd::RecordTable table = s->dataset().table;
    auto& column = table.labels[ncd::index_of(task)];
    column.assign(table.records.size(), std::nullopt);
    table.has_label_column[ncd::index_of(task)] = true;
    ncd::ExtraColumn provenance{std::string(ncd::to_string(task)) + "_provenance", {}};
    for (std::size_t i = 0; i < state->store.size(); ++i) {
        if (state->store.is_labeled(i)) {
            column[i] = labeling::label_to_int(state->store.label(i));
        }
        provenance.values.emplace_back(labeling::to_string(state->store.provenance(i)));
    }
    return ncd::write_records_csv(table, std::span<const ncd::ExtraColumn>(&provenance, 1));
}

Json Service::explanations(const std::string& session_id, const std::vector<std::string>& record_ids) const {
    const auto s = session(session_id);
    const auto state = s->snapshot();
    if (!state->model) {
        throw ProtocolError(kUntrained);
    }
    const LabelStore& store = state->store;
    std::vector<std::size_t> rows;
    if (record_ids.empty()) {
        for (std::size_t i = 0; i < store.size(); ++i) {
            rows.push_back(i);
        }
    }
    for (const auto& id : record_ids) {
        const auto i = store.index_of(id);
        if (!i) {
            throw NotFound("unknown record '" + id + "'");
        }
        rows.push_back(*i);
    }
    const ebm::EbmModel& model = *state->model;
    Json out = Json::array();
    for (const std::size_t i : rows) {
        const auto& x = store.features(i);
        const double p = model.predict_proba(x);
        Json features = Json::array();
        const auto contributions = model.contributions(x);
        const auto heat = model.heat(x);
        for (std::size_t f = 0; f < x.size(); ++f) {
            features.push_back({{"name", store.feature_names()[f]},
                                {"value", number_or_null(x[f])},
                                {"contribution", contributions[f].value},
                                {"heat", heat[f].value}});
        }
        out.push_back({{"record_id", store.record_id(i)},
                       {"raw_score", model.raw_score(x)},
                       {"intercept", model.intercept()},
                       {"p", p},
                       {"confidence", labeling::confidence_from_probability(p)},
                       {"pseudo_label", model.predict_label(x)},
                       {"stored_label", stored_label_json(store, i)},
                       {"provenance", labeling::to_string(store.provenance(i))},
                       {"features", std::move(features)}});
    }
    return {{"session_id", s->id()}, {"model_version", state->model_version}, {"records", std::move(out)}};
}

std::string Service::model_json(const std::string& session_id) const {
    const auto s = session(session_id);
    const auto state = s->snapshot();
    if (!state->model) {
        throw ProtocolError(kUntrained);
    }
    return ebm::serialize(*state->model);
}

void Service::append_event(const Session& s, const Json& event) const {
    std::ofstream out(dir_ / "sessions" / s.id() / "events.jsonl", std::ios::app | std::ios::binary);
    out << event.dump() << '\n';
    if (!out) {
        throw Error("cannot append to the event log of session " + s.id());
    }
}

void Service::save_model(const Session& s, const SessionState& state) const {
    const Json j{{"model_version", state.model_version}, {"model", Json::parse(ebm::serialize(*state.model))}};
    write_atomically(dir_ / "sessions" / s.id() / "model.json", j.dump() + "\n");
}

void Service::load() {
    for (const auto& entry : fs::directory_iterator(dir_ / "datasets")) {
        if (entry.path().extension() != ".csv") {
            continue;
        }
        auto ds = std::make_shared<Dataset>();
        ds->id = entry.path().stem().string();
        ds->table = ncd::read_records_csv(read_file(entry.path()));
        next_dataset_ = std::max(next_dataset_, numeric_suffix(ds->id) + 1);
        datasets_[ds->id] = std::move(ds);
    }
    for (const auto& entry : fs::directory_iterator(dir_ / "sessions")) {
        const fs::path config_path = entry.path() / "session.json";
        if (!entry.is_directory() || !fs::exists(config_path)) {
            continue;
        }
        const Json saved = Json::parse(read_file(config_path));
        SessionConfig config = parse_session_config(saved);
        const auto ds_it = datasets_.find(config.dataset_id);
        if (ds_it == datasets_.end()) {
            throw DeserializeError("session " + entry.path().filename().string() + " refers to a missing dataset");
        }
        auto s = std::make_shared<Session>(saved.at("session_id").get<std::string>(), config, ds_it->second);
        auto state = std::make_shared<SessionState>();
        state->store = initial_store(*ds_it->second, config.task);

        std::ifstream events(entry.path() / "events.jsonl", std::ios::binary);
        for (std::string line; std::getline(events, line);) {
            if (line.empty()) {
                continue;
            }
            const Json e = Json::parse(line);
            auto index = [&](const Json& id) {
                const auto i = state->store.index_of(id.get<std::string>());
                if (!i) {
                    throw DeserializeError("event log of session " + s->id() + " names an unknown record");
                }
                return *i;
            };
            if (e.at("type") == "present") {
                std::vector<std::size_t> rows;
                for (const auto& id : e.at("records")) {
                    rows.push_back(index(id));
                }
                const auto pseudo = e.at("pseudo_labels").get<std::vector<int>>();
                state->store.present(rows, pseudo);
            } else if (e.at("type") == "labels") {
                std::vector<Decision> decisions;
                for (const auto& d : e.at("decisions")) {
                    decisions.push_back({index(d.at("record_id")), parse_action(d.at("action").get<std::string>()),
                                         d.at("value").get<int>()});
                }
                state->store = labeling::apply_labels(state->store, decisions);
                const auto request_id = e.value("request_id", std::string{});
                if (!request_id.empty()) {
                    s->replies()[request_id] = e.at("reply");
                }
            }
        }
        const fs::path model_path = entry.path() / "model.json";
        if (fs::exists(model_path)) {
            const Json m = Json::parse(read_file(model_path));
            state->model = std::make_shared<const ebm::EbmModel>(ebm::deserialize(m.at("model").dump()));
            state->model_version = m.at("model_version").get<std::uint64_t>();
        }
        s->publish(state);
        next_session_ = std::max(next_session_, numeric_suffix(s->id()) + 1);
        sessions_[s->id()] = std::move(s);
    }
}

Reply error_reply(const std::exception& e) {
    Json body{{"error", e.what()}};
    int status = 500;
    if (const auto* csv = dynamic_cast<const CsvError*>(&e)) {
        status = 400;
        body["row"] = csv->row();
        body["column"] = csv->column();
    } else if (dynamic_cast<const NotFound*>(&e) != nullptr) {
        status = 404;
    } else if (dynamic_cast<const ProtocolError*>(&e) != nullptr ||
               dynamic_cast<const DegenerateLabels*>(&e) != nullptr) {
        status = 409;
    } else if (dynamic_cast<const InvalidInput*>(&e) != nullptr ||
               dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr) {
        status = 400;
    }
    return {status, body.dump(), "application/json"};
}

} // namespace xlabel::service
