#include "xlabel/service.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <csignal>
#include <iostream>

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server != nullptr) {
        g_server->stop();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"xlabel-serve: HTTP labeling service"};
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "xlabel-data";
    app.add_option("--host", host, "address to bind")->capture_default_str();
    app.add_option("--port", port, "TCP port")->capture_default_str()->check(CLI::Range(1, 65535));
    app.add_option("--data-dir", data_dir, "datasets, sessions and event logs")
        ->envname("XLABEL_DATA_DIR")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        xlabel::service::Service service(data_dir);
        httplib::Server server;
        xlabel::service::register_routes(server, service);
        g_server = &server;
        std::signal(SIGINT, stop_server);
        std::signal(SIGTERM, stop_server);
        std::cout << "serving " << data_dir << " on http://" << host << ":" << port << std::endl;
        if (!server.listen(host, port)) {
            std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
