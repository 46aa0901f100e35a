#include <gtest/gtest.h>

#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "fieldbabel/crs.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/http_api.hpp"
#include "fieldbabel/service.hpp"
#include "fieldbabel/zip.hpp"

using namespace fbtest;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::io_error;
}

struct Recorder : Notifier {
    std::mutex m;
    std::vector<Notification> seen;
    void notify(const Notification& n) override {
        std::lock_guard l(m);
        seen.push_back(n);
    }
};

constexpr int kSmall = 120;

// AOI over the middle of the small desk scenes.
std::string small_aoi() {
    const auto ll = unproject_bbox({590200, 6111000, 591000, 6111800}, 32632);
    return polygon_geojson(rect(ll));
}

struct ServiceFixture : ::testing::Test {
    TempDir dir{"service"};
    Desk desk = make_desk(dir.path(), kSmall);
    std::shared_ptr<Recorder> rec = std::make_shared<Recorder>();
    std::unique_ptr<Service> svc;

    void SetUp() override {
        svc = std::make_unique<Service>(desk.config, rec);
        ingest_desk(svc->catalog(), desk);
    }
};

}  // namespace

TEST(ServiceHelpers, Email) {
    EXPECT_TRUE(valid_email("a@b.dk"));
    EXPECT_TRUE(valid_email("first.last+tag@sub.example.com"));
    for (const char* bad : {"", "a", "@b.dk", "a@", "a@dk", "a@@b.dk", "a b@c.dk", "a@b.dk\n", "a@b@c.dk"}) {
        EXPECT_FALSE(valid_email(bad)) << bad;
    }
    EXPECT_EQ(mask_email("farmer@example.dk"), "f***@example.dk");
    EXPECT_EQ(mask_email("nope"), "***");
}

TEST(ServiceHelpers, RequestIds) {
    const auto a = new_request_id(), b = new_request_id();
    EXPECT_EQ(a.size(), 32u);
    EXPECT_EQ(a.find_first_not_of("0123456789abcdef"), std::string::npos);
    EXPECT_NE(a, b);
}

TEST(Config, ParsesAndResolvesPaths) {
    const auto c = parse_service_config(R"({"catalog_root":"cat","state_dir":"/abs/state","bind":"0.0.0.0:9000",
        "lpis":{"shp":"l/m.shp","id_column":"ID"},"color_ranges":{"vv":[-20,-1]},"filter":{"window":9},"workers":2})",
                                        "/base");
    EXPECT_EQ(c.catalog_root, fs::path("/base/cat"));
    EXPECT_EQ(c.state_dir, fs::path("/abs/state"));
    EXPECT_EQ(c.bind_host, "0.0.0.0");
    EXPECT_EQ(c.bind_port, 9000);
    ASSERT_TRUE(c.lpis);
    EXPECT_EQ(c.lpis->dbf, fs::path("/base/l/m.dbf"));
    EXPECT_EQ(c.lpis->columns.parcel_id, "ID");
    EXPECT_EQ(c.lpis->columns.crop_code, "crop_code");
    EXPECT_EQ(c.color_ranges.vv, (BandRange{-20, -1}));
    EXPECT_EQ(c.filter.window, 9);
    EXPECT_EQ(c.workers, 2);
}

TEST(Config, Errors) {
    for (const char* bad : {"[]", "{", R"({"colour":1})", R"({"workers":0})", R"({"bind":"nohost"})", R"({"bind":"h:x"})",
                            R"({"bind":"h:70000"})", R"({"erosion_m":-1})", R"({"color_ranges":{"vv":[1,0]}})",
                            R"({"color_ranges":{"vv":[1]}})", R"({"filter":{"window":4}})", R"({"grid":{"crs":3857}})",
                            R"({"lpis":{}})", R"({"workers":"two"})"}) {
        EXPECT_EQ(code_of([&] { parse_service_config(bad); }), ErrorCode::invalid_config) << bad;
    }
    TempDir dir;
    EXPECT_EQ(code_of([&] { load_service_config(dir / "missing.json"); }), ErrorCode::io_error);
}

TEST_F(ServiceFixture, SubmitValidation) {
    const auto aoi = small_aoi();
    EXPECT_EQ(code_of([&] { svc->submit_request("{", "a@b.dk", "Corn", 2017); }), ErrorCode::malformed_document);
    EXPECT_EQ(code_of([&] { svc->submit_request(feature_collection({rect(10, 55, 10.1, 55.1), rect(10.2, 55, 10.3, 55.1)}),
                                                "a@b.dk", "Corn", 2017); }),
              ErrorCode::not_single_polygon);
    EXPECT_EQ(code_of([&] { svc->submit_request(R"({"type":"Point","coordinates":[10,55]})", "a@b.dk", "Corn", 2017); }),
              ErrorCode::not_polygon_type);
    EXPECT_EQ(code_of([&] { svc->submit_request(polygon_geojson(rect(9.9, 55, 11.0, 55.5)), "a@b.dk", "Corn", 2017); }),
              ErrorCode::oversized_aoi);
    EXPECT_EQ(code_of([&] { svc->submit_request(aoi, "nope", "Corn", 2017); }), ErrorCode::invalid_email);
    EXPECT_EQ(code_of([&] { svc->submit_request(aoi, "a@b.dk", "Rye", 2017); }), ErrorCode::unknown_crop);
    EXPECT_EQ(code_of([&] { svc->submit_request(aoi, "a@b.dk", "Corn", 1900); }), ErrorCode::invalid_argument);
    EXPECT_TRUE(svc->jobs().all().empty());

    const auto id = svc->submit_request(aoi, "a@b.dk", "vinterhvede", 2017);
    const auto r = svc->get_status(id);
    EXPECT_EQ(r.crop, "Winter wheat");
    EXPECT_EQ(r.status, JobStatus::pending);
    EXPECT_EQ(code_of([&] { svc->download_bundle(id); }), ErrorCode::conflict);
    EXPECT_EQ(code_of([&] { svc->timeseries_json(id); }), ErrorCode::conflict);
    EXPECT_EQ(code_of([&] { svc->get_status("0123"); }), ErrorCode::not_found);
}

TEST_F(ServiceFixture, ProcessesIntoBundleAndNotifies) {
    const auto id = svc->submit_request(small_aoi(), "farmer@example.dk", "Winter wheat", 2017);
    EXPECT_EQ(svc->process_next_job(), id);
    EXPECT_FALSE(svc->process_next_job());
    const auto r = svc->get_status(id);
    ASSERT_EQ(r.status, JobStatus::done) << r.message.value_or("");
    EXPECT_EQ(r.scene_count, 3);
    ASSERT_TRUE(r.notification);

    ASSERT_EQ(rec->seen.size(), 1u);
    EXPECT_EQ(rec->seen[0].email, "farmer@example.dk");
    EXPECT_EQ(rec->seen[0].url, "http://127.0.0.1:8080/api/requests/" + id + "/bundle.zip");

    const auto entries = read_zip(svc->download_bundle(id));
    std::vector<std::string> names;
    for (const auto& e : entries) names.push_back(e.name);
    EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
    EXPECT_NE(std::find(names.begin(), names.end(), "project.qgs"), names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "manifest.json"), names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "scenes/2017-04-15_66_DESCENDING.tif"), names.end());
    // nothing in the archive identifies the requester
    for (const auto& e : entries) {
        const std::string body(e.data.begin(), e.data.end());
        EXPECT_EQ(body.find("farmer@example.dk"), std::string::npos) << e.name;
        EXPECT_EQ(body.find(id), std::string::npos) << e.name;
    }
    EXPECT_TRUE(json::parse(svc->timeseries_json(id)).is_object() || json::parse(svc->timeseries_json(id)).is_array());

    const auto view = json::parse(svc->status_view(r));
    EXPECT_EQ(view["email"], "f***@example.dk");
    EXPECT_EQ(view["status"], "done");
    EXPECT_EQ(view["bundle_url"], "/api/requests/" + id + "/bundle.zip");
}

TEST_F(ServiceFixture, NoScenesStillGivesABundle) {
    const auto id = svc->submit_request(small_aoi(), "a@b.dk", "Corn", 2015);
    svc->process_next_job();
    const auto r = svc->get_status(id);
    ASSERT_EQ(r.status, JobStatus::done) << r.message.value_or("");
    EXPECT_EQ(r.scene_count, 0);
    const auto entries = read_zip(svc->download_bundle(id));
    for (const auto& e : entries) EXPECT_NE(e.name.rfind("scenes/", 0), 0u) << e.name;
}

TEST_F(ServiceFixture, WorkerPoolDrainsQueue) {
    std::vector<std::string> ids;
    for (int y : {2016, 2017}) ids.push_back(svc->submit_request(small_aoi(), "a@b.dk", "All", y));
    {
        WorkerPool pool(*svc, 2, std::chrono::milliseconds(20));
        for (int i = 0; i < 500 && pool.processed() < 2; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
        EXPECT_EQ(pool.processed(), 2u);
    }
    for (const auto& id : ids) EXPECT_EQ(svc->get_status(id).status, JobStatus::done);
}

TEST_F(ServiceFixture, HttpApi) {
    HttpApi api(*svc);
    const int port = api.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread server([&] { api.listen(); });
    httplib::Client cli("127.0.0.1", port);

    auto res = cli.Get("/api/crops");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto crops = json::parse(res->body);
    ASSERT_EQ(crops.size(), 7u);
    EXPECT_EQ(crops[6]["lpis_name"], "Vinterhvede");
    EXPECT_EQ(crops[6]["start"], "08-15");
    EXPECT_EQ(crops[6]["start_year_offset"], -1);

    const json body{{"geojson", json::parse(small_aoi())}, {"email", "a@b.dk"}, {"crop", "Winter wheat"}, {"year", 2017}};
    res = cli.Post("/api/requests", body.dump(), "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201) << res->body;
    const auto id = json::parse(res->body)["request_id"].get<std::string>();

    res = cli.Get("/api/requests/" + id);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["status"], "pending");
    EXPECT_EQ(cli.Get("/api/requests/" + id + "/bundle.zip")->status, 409);
    EXPECT_EQ(cli.Get("/api/requests/" + std::string(32, 'f'))->status, 404);
    EXPECT_EQ(cli.Get("/api/requests/../etc")->status, 404);

    for (const auto& bad : {json{{"geojson", "{"}, {"email", "a@b.dk"}, {"crop", "Corn"}, {"year", 2017}},
                            json{{"email", "a@b.dk"}, {"crop", "Corn"}, {"year", 2017}},
                            json{{"geojson", body["geojson"]}, {"email", "a@b.dk"}, {"crop", "Corn"}, {"year", "2017"}},
                            json{{"geojson", body["geojson"]}, {"email", "x"}, {"crop", "Corn"}, {"year", 2017}},
                            json{{"geojson", body["geojson"]}, {"email", "a@b.dk"}, {"crop", "Rye"}, {"year", 2017}}}) {
        res = cli.Post("/api/requests", bad.dump(), "application/json");
        EXPECT_EQ(res->status, 400) << bad.dump();
        EXPECT_TRUE(json::parse(res->body).contains("error"));
    }
    res = cli.Post("/api/requests", "not json", "application/json");
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "invalid_argument");

    svc->process_next_job();
    res = cli.Get("/api/requests/" + id + "/bundle.zip");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "application/zip");
    const auto direct = svc->download_bundle(id);
    EXPECT_EQ(res->body, std::string(direct.begin(), direct.end()));
    res = cli.Get("/api/requests/" + id + "/timeseries.json");
    EXPECT_EQ(res->status, 200);
    EXPECT_TRUE(json::accept(res->body));

    api.stop();
    server.join();
}

TEST(HttpStatus, Mapping) {
    EXPECT_EQ(http_status_for(ErrorCode::oversized_aoi), 400);
    EXPECT_EQ(http_status_for(ErrorCode::unknown_crop), 400);
    EXPECT_EQ(http_status_for(ErrorCode::not_found), 404);
    EXPECT_EQ(http_status_for(ErrorCode::conflict), 409);
    EXPECT_EQ(http_status_for(ErrorCode::io_error), 500);
}
