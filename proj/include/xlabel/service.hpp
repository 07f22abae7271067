#pragma once

// Session-based labeling service. Service holds the state and persistence and
// speaks JSON; register_routes() puts it behind an HTTP server.

#include "xlabel/ebm.hpp"
#include "xlabel/labeling.hpp"
#include "xlabel/ncd.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace httplib {
class Server;
}

namespace xlabel::service {

using Json = nlohmann::ordered_json;

/// Model quantities go on the wire rounded to this many decimals.
inline constexpr int kWireDecimals = 6;
double round_for_wire(double v);

struct Dataset {
    std::string id;
    ncd::RecordTable table;
};

struct SessionConfig {
    std::string dataset_id;
    ncd::Task task = ncd::Task::DM;
    labeling::SamplingMethod sampling = labeling::NLeast{20};
    bool detect_mismatches = true;
    /// When false, label submissions only store labels; POST .../retrain fits.
    bool auto_retrain = true;
    ebm::TrainConfig train{};
};

/// Immutable view published after every change; readers never see a
/// half-updated store or model.
struct SessionState {
    labeling::LabelStore store;
    std::shared_ptr<const ebm::EbmModel> model;
    std::uint64_t model_version = 0;
};

class Session {
public:
    Session(std::string id, SessionConfig config, std::shared_ptr<const Dataset> dataset);

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return config_; }
    const Dataset& dataset() const { return *dataset_; }

    std::shared_ptr<const SessionState> snapshot() const;
    void publish(std::shared_ptr<const SessionState> next);

    /// Serializes batch delivery, label submission and retraining.
    std::mutex& write_mutex() { return write_mutex_; }

    /// Responses of label submissions by request_id.
    std::map<std::string, Json>& replies() { return replies_; }

private:
    std::string id_;
    SessionConfig config_;
    std::shared_ptr<const Dataset> dataset_;
    mutable std::mutex state_mutex_;
    std::shared_ptr<const SessionState> state_;
    std::mutex write_mutex_;
    std::map<std::string, Json> replies_;
};

/// Feature rows of a task. Upstream *_pred inputs take the dataset's label
/// for that task when present and the guideline rule otherwise.
std::vector<ebm::FeatureVector> session_features(const ncd::RecordTable& table, ncd::Task task);

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

class Service {
public:
    /// Creates the directory if needed and reloads every stored dataset and
    /// session from it.
    explicit Service(std::filesystem::path data_dir);

    Json create_dataset(std::string_view csv_text);
    Json dataset_summary(const std::string& dataset_id) const;

    Json create_session(const Json& request);
    Json session_summary(const std::string& session_id) const;

    /// Empty when nothing is left to present.
    std::optional<Json> next_batch(const std::string& session_id);
    Json submit_labels(const std::string& session_id, const Json& request);
    Json retrain(const std::string& session_id);
    /// Current labels of the session task plus a provenance column.
    std::string export_csv(const std::string& session_id) const;
    /// Full-precision p, contributions and heat for the requested records
    /// (all records when ids is empty).
    Json explanations(const std::string& session_id, const std::vector<std::string>& record_ids) const;
    std::string model_json(const std::string& session_id) const;

    const std::filesystem::path& data_dir() const { return dir_; }

private:
    std::shared_ptr<Session> session(const std::string& id) const;
    std::shared_ptr<const Dataset> dataset(const std::string& id) const;
    void load();
    void append_event(const Session& s, const Json& event) const;
    void save_model(const Session& s, const SessionState& state) const;

    std::filesystem::path dir_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_dataset_ = 1;
    std::uint64_t next_session_ = 1;
};

/// Maps library errors to HTTP statuses: 400 bad input, 404 unknown id,
/// 409 protocol violations and untrained sessions.
Reply error_reply(const std::exception& e);

void register_routes(httplib::Server& server, Service& service);

} // namespace xlabel::service
