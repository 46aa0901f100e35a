#pragma once

#include <memory>
#include <string>

#include "fieldbabel/error.hpp"
#include "fieldbabel/service.hpp"

namespace fieldbabel {

/// HTTP status for a failure category: 400 for request validation, 404,
/// 409, and 500 for everything else.
int http_status_for(ErrorCode code);

/// JSON API over a Service:
///   POST /api/requests                       {geojson, email, crop, year, ratio_mode?} → 201 {request_id}
///   GET  /api/requests/{id}                  status view
///   GET  /api/requests/{id}/bundle.zip
///   GET  /api/requests/{id}/timeseries.json
///   GET  /api/crops
/// Errors come back as {"error": <code>, "message": <text>}. With a static
/// root configured, other GETs serve files from it.
class HttpApi {
public:
    explicit HttpApi(Service& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace fieldbabel
