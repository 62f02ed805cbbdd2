#include "lxdr/service.hpp"

#include <doctest.h>
#include <httplib.h>

#include <thread>

using namespace lxdr;
using nlohmann::json;

namespace {

ApiResponse post(Service& s, const std::string& path, const json& body) {
  return s.handle("POST", path, body.dump());
}

std::string bundled(Service& s, const std::string& name) {
  const ApiResponse r = post(s, "/api/datasets", {{"bundled", name}});
  REQUIRE(r.status == 200);
  return r.body.at("dataset_id");
}

std::string kpca_model(Service& s, const std::string& ds) {
  const ApiResponse r = post(s, "/api/dr",
                             {{"dataset_id", ds}, {"method", "kpca-rbf"}, {"n_components", 2},
                              {"params", {{"gamma", 0.1}}}, {"seed", 42}});
  REQUIRE(r.status == 200);
  return r.body.at("model_id");
}

void check_error_shape(const ApiResponse& r) {
  CHECK(r.body.contains("error"));
  CHECK(r.body.contains("where"));
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("datasets: bundled, csv upload and parse errors") {
  Service s;
  const ApiResponse r = post(s, "/api/datasets", {{"bundled", "diabetes"}});
  CHECK(r.status == 200);
  CHECK(r.body.at("rows") == 442);
  CHECK(r.body.at("cols") == 10);
  CHECK(r.body.at("feature_names").size() == 10);

  const ApiResponse csv = s.handle("POST", "/api/datasets", "a,b\n1,2\n3,4\n", "text/csv");
  CHECK(csv.status == 200);
  CHECK(csv.body.at("rows") == 2);
  const ApiResponse again = s.handle("POST", "/api/datasets", "a,b\n1,2\n3,4\n", "text/csv");
  CHECK(again.body.at("dataset_id") != csv.body.at("dataset_id"));

  const ApiResponse bad = s.handle("POST", "/api/datasets", "a,b\n1,2\n3,x\n", "text/csv");
  CHECK(bad.status == 400);
  CHECK(bad.body.at("line") == 3);
  CHECK(bad.body.at("column") == 2);
  check_error_shape(bad);

  CHECK(post(s, "/api/datasets", {{"bundled", "mnist"}}).status == 422);
  CHECK(s.handle("POST", "/api/datasets", "{not json").status == 400);
}

TEST_CASE("dr: embeddings, variance rule and errors") {
  Service s;
  const std::string ds = bundled(s, "diabetes");
  const ApiResponse k = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "kpca-rbf"}, {"n_components", 2}});
  CHECK(k.status == 200);
  CHECK(k.body.at("embedding").size() == 442);
  CHECK(k.body.at("embedding")[0].size() == 2);
  CHECK(k.body.at("targets").size() == 442);

  const ApiResponse v = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "pca"}, {"variance", 0.95}});
  CHECK(v.body.at("n_reduced") == 8);

  const ApiResponse unknown = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "tsne"}, {"n_components", 2}});
  CHECK(unknown.status == 422);
  CHECK(unknown.body.at("where") == "method");
  CHECK(post(s, "/api/dr", {{"dataset_id", "ds-99"}, {"method", "pca"}, {"n_components", 2}}).status == 404);
  CHECK(post(s, "/api/dr", {{"dataset_id", ds}, {"method", "pca"}}).status == 422);
  CHECK(post(s, "/api/dr", {{"dataset_id", ds}, {"method", "pca"}, {"n_components", 11}}).status == 422);
}

TEST_CASE("explain: outlier weights, determinism and errors") {
  Service s;
  const std::string ds = bundled(s, "diabetes");
  const std::string m = kpca_model(s, ds);
  const json req = {{"model_id", m}, {"instance_index", 123}, {"ng", "knn"}, {"k", 44}, {"auto_alpha", true}};
  const ApiResponse a = post(s, "/api/explain", req);
  REQUIRE(a.status == 200);
  CHECK(a.body.at("slopes").size() == 2);
  CHECK(a.body.at("components").size() == 2);
  CHECK(a.body.at("components")[0].at("ranking").size() == 10);
  CHECK(a.body.at("instance_difference").get<double>() < 1e-2);
  const auto c1 = a.body.at("components")[0].at("weights");
  double max_abs = 0.0;
  for (const auto& w : c1) max_abs = std::max(max_abs, std::abs(w.get<double>()));
  CHECK(max_abs > 0.01);
  CHECK(max_abs < 2.0);

  CHECK(post(s, "/api/explain", req).body == a.body);

  json vec_req = req;
  vec_req.erase("instance_index");
  vec_req["vector"] = a.body.at("query");
  CHECK(post(s, "/api/explain", vec_req).body.at("slopes") == a.body.at("slopes"));

  json big = req;
  big["k"] = 500;
  const ApiResponse too_big = post(s, "/api/explain", big);
  CHECK(too_big.status == 422);
  CHECK(too_big.body.at("where") == "k");
  CHECK(post(s, "/api/explain", {{"model_id", "m-42"}, {"instance_index", 0}}).status == 404);
  CHECK(post(s, "/api/explain", {{"model_id", m}, {"instance_index", 442}}).status == 422);
  CHECK(post(s, "/api/explain", {{"model_id", m}, {"vector", {1, 2}}}).status == 422);
}

TEST_CASE("pca explain reports the weights difference") {
  Service s;
  const std::string ds = bundled(s, "iris");
  const ApiResponse fit = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "pca"}, {"n_components", 3}});
  const ApiResponse e = post(s, "/api/explain", {{"model_id", fit.body.at("model_id")}, {"instance_index", 0}, {"k", 50}});
  REQUIRE(e.status == 200);
  CHECK(e.body.at("weights_difference").get<double>() < 1e-3);
}

TEST_CASE("whatif: shift, no-op, predictor and errors") {
  Service s;
  const std::string ds = bundled(s, "diabetes");
  const std::string m = kpca_model(s, ds);

  const ApiResponse zero = post(s, "/api/whatif", {{"model_id", m}, {"instance", 123}, {"feature", 7}, {"value", 0.0}});
  REQUIRE(zero.status == 200);
  CHECK(zero.body.at("before") != zero.body.at("after"));
  CHECK_FALSE(zero.body.contains("prediction_before"));

  const ApiResponse same = post(s, "/api/whatif", {{"model_id", m}, {"instance", 5}, {"feature", 2},
                                                   {"value", nullptr}, {"to_mean", false}});
  CHECK(same.status == 422);

  const ApiResponse pred = post(s, "/api/predictor", {{"model_id", m}, {"alpha", 1.0}});
  CHECK(pred.status == 200);
  const ApiResponse with_pred = post(s, "/api/whatif", {{"model_id", m}, {"instance", 5}, {"feature", 2}, {"to_mean", true}});
  CHECK(with_pred.body.contains("prediction_before"));
  CHECK(with_pred.body.contains("prediction_after"));

  const ApiResponse bad = post(s, "/api/whatif", {{"model_id", m}, {"instance", 5}, {"feature", 99}, {"value", 0.0}});
  CHECK(bad.status == 422);
  CHECK(bad.body.at("where") == "feature");
  CHECK(post(s, "/api/whatif", {{"model_id", "nope"}, {"instance", 0}, {"feature", 0}, {"value", 0.0}}).status == 404);
}

TEST_CASE("whatif with the current value is a no-op") {
  Service s;
  const std::string ds = bundled(s, "iris");
  const ApiResponse fit = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "pca"}, {"n_components", 2}});
  const ApiResponse r = post(s, "/api/whatif", {{"model_id", fit.body.at("model_id")}, {"instance", {5.1, 3.5, 1.4, 0.2}},
                                                {"feature", 0}, {"value", 5.1}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("before") == r.body.at("after"));
}

TEST_CASE("unknown routes and health") {
  Service s;
  CHECK(s.handle("GET", "/api/health", "").status == 200);
  const ApiResponse r = s.handle("POST", "/api/nothing", "{}");
  CHECK(r.status == 404);
  check_error_shape(r);
}

TEST_CASE("replaying a session gives identical bodies") {
  auto run = [] {
    Service s;
    std::vector<json> bodies;
    const std::string ds = bundled(s, "iris");
    const ApiResponse fit = post(s, "/api/dr", {{"dataset_id", ds}, {"method", "ae"}, {"n_components", 2},
                                                {"params", {{"epochs", 5}}}, {"seed", 3}});
    bodies.push_back(fit.body);
    bodies.push_back(post(s, "/api/explain", {{"model_id", fit.body.at("model_id")}, {"instance_index", 7}}).body);
    return bodies;
  };
  CHECK(run() == run());
}

TEST_CASE("http round trip over a socket") {
  Service service;
  httplib::Server server;
  mount_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/api/datasets", R"({"bundled":"iris"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 200);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(created->body).at("rows") == 150);

  const auto preflight = client.Options("/api/explain");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  const auto bad = client.Post("/api/dr", R"({"dataset_id":"ds-9","method":"pca","n_components":2})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 404);

  server.stop();
  t.join();
}

}
