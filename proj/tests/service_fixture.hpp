#pragma once

#include "xlabel/ncd.hpp"
#include "xlabel/service.hpp"

#include "httplib.h"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace xlabel::testing {

inline std::filesystem::path fresh_dir(const std::string& tag) {
    std::random_device rd;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("xlabel-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::remove_all(dir);
    return dir;
}

/// Service on a loopback port, served from a background thread.
class LiveServer {
public:
    explicit LiveServer(const std::filesystem::path& dir) : service_(dir) {
        service::register_routes(server_, service_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) {
            throw std::runtime_error("cannot bind a loopback port");
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LiveServer() {
        server_.stop();
        thread_.join();
    }
    LiveServer(const LiveServer&) = delete;
    LiveServer& operator=(const LiveServer&) = delete;

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(std::chrono::seconds(60));
        return c;
    }
    service::Service& service() { return service_; }

private:
    service::Service service_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

inline service::Json json_of(const httplib::Result& r) {
    if (!r) {
        throw std::runtime_error("request failed: " + httplib::to_string(r.error()));
    }
    return service::Json::parse(r->body);
}

inline ncd::RecordTable synthetic_table(std::uint64_t seed, std::size_t n = 838, double flag_noise = 0.0) {
    ncd::SynthConfig config;
    config.n_records = n;
    config.flag_noise = flag_noise;
    config.seed = seed;
    return ncd::to_table(ncd::synth_generate(config));
}

} // namespace xlabel::testing
