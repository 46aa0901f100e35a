#include "fieldbabel/http_api.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fmt/format.h>

#include "fieldbabel/crop_calendar.hpp"

using nlohmann::json;

namespace fieldbabel {

int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::malformed_document:
        case ErrorCode::not_single_polygon:
        case ErrorCode::not_polygon_type:
        case ErrorCode::unclosed_ring:
        case ErrorCode::invalid_polygon:
        case ErrorCode::oversized_aoi:
        case ErrorCode::invalid_email:
        case ErrorCode::unknown_crop:
        case ErrorCode::invalid_argument:
            return 400;
        case ErrorCode::not_found:
            return 404;
        case ErrorCode::conflict:
            return 409;
        default:
            return 500;
    }
}

namespace {

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    res.status = http_status_for(code);
    res.set_content(json{{"error", std::string(to_string(code))}, {"message", message}}.dump(), "application/json");
}

std::string month_day(MonthDay md) { return fmt::format("{:02d}-{:02d}", md.month, md.day); }

std::string crops_json() {
    json out = json::array();
    for (const auto& c : list_crops()) {
        out.push_back({{"english_name", std::string(c.english_name)},
                       {"lpis_name", std::string(c.lpis_name)},
                       {"start", month_day(c.start)},
                       {"start_year_offset", c.start_year_offset},
                       {"end", month_day(c.end)},
                       {"end_year_offset", c.end_year_offset}});
    }
    return out.dump();
}

// Request ids are 32 lowercase hex digits; anything else cannot exist.
bool plausible_id(const std::string& id) {
    return id.size() == 32 && id.find_first_not_of("0123456789abcdef") == std::string::npos;
}

}  // namespace

struct HttpApi::Impl {
    Service& service;
    httplib::Server server;

    explicit Impl(Service& s) : service(s) { routes(); }

    template <typename F>
    void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            spdlog::error("http handler failed: {}", e.what());
            send_error(res, ErrorCode::io_error, e.what());
        }
    }

    std::string id_of(const httplib::Request& req) {
        const auto id = req.matches[1].str();
        if (!plausible_id(id)) throw Error(ErrorCode::not_found, fmt::format("no request {}", id));
        return id;
    }

    void routes() {
        server.Post("/api/requests", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                json body;
                try {
                    body = json::parse(req.body);
                } catch (const json::exception& e) {
                    throw Error(ErrorCode::invalid_argument, fmt::format("request body is not JSON: {}", e.what()));
                }
                if (!body.is_object()) throw Error(ErrorCode::invalid_argument, "request body must be a JSON object");
                for (const char* key : {"geojson", "email", "crop", "year"}) {
                    if (!body.contains(key)) throw Error(ErrorCode::invalid_argument, fmt::format("missing field '{}'", key));
                }
                const auto& g = body["geojson"];
                const std::string geojson = g.is_string() ? g.get<std::string>() : g.dump();
                if (!body["email"].is_string() || !body["crop"].is_string() || !body["year"].is_number_integer()) {
                    throw Error(ErrorCode::invalid_argument, "email and crop must be strings, year an integer");
                }
                const auto mode = body.contains("ratio_mode") && !body["ratio_mode"].is_null()
                                      ? parse_ratio_mode(body["ratio_mode"].get<std::string>())
                                      : RatioMode::db_quotient;
                const auto id = service.submit_request(geojson, body["email"].get<std::string>(),
                                                       body["crop"].get<std::string>(), body["year"].get<int>(), mode);
                res.status = 201;
                res.set_content(json{{"request_id", id}}.dump(), "application/json");
            });
        });
        server.Get(R"(/api/requests/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(service.status_view(service.get_status(id_of(req))), "application/json"); });
        });
        server.Get(R"(/api/requests/([^/]+)/bundle\.zip)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto id = id_of(req);
                const auto bytes = service.download_bundle(id);
                res.set_header("Content-Disposition", fmt::format("attachment; filename=\"fieldbabel-{}.zip\"", id));
                res.set_content(std::string(bytes.begin(), bytes.end()), "application/zip");
            });
        });
        server.Get(R"(/api/requests/([^/]+)/timeseries\.json)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { res.set_content(service.timeseries_json(id_of(req)), "application/json"); });
        });
        server.Get("/api/crops", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(crops_json(), "application/json");
        });
        server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
            spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
        });
        if (service.config().static_root) {
            if (!server.set_mount_point("/", service.config().static_root->string())) {
                spdlog::warn("static root {} does not exist", service.config().static_root->string());
            }
        }
    }
};

HttpApi::HttpApi(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpApi::listen() { return impl_->server.listen_after_bind(); }

void HttpApi::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace fieldbabel
