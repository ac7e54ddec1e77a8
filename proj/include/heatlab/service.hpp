#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/json_io.hpp"

namespace heatlab {

inline constexpr std::string_view kApiVersion = "1";

struct HttpRequest {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;

    Json json() const { return Json::parse(body); }
};

int http_status(Errc code);
std::string_view error_description(Errc code);

/// {code, status, description} for every error the service can return.
Json error_catalog();

/// Transport-independent request handler over the workspaces found in one
/// directory. Workspaces are loaded once; analysis outputs are read per request.
class Service {
public:
    struct Options {
        int jobs = 1;
        bool lenient = true; ///< skip malformed scenes instead of refusing the workspace
    };

    explicit Service(const std::filesystem::path& workspaces_root);
    Service(const std::filesystem::path& workspaces_root, Options options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse handle(const HttpRequest& req);
    std::vector<std::string> city_ids() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocking HTTP front end over `Service::handle`.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    /// Binds and returns the port; 0 picks a free one.
    int bind(const std::string& host, int port);
    void run(); ///< blocks until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace heatlab
