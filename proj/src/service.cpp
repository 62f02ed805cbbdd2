#include "lxdr/service.hpp"

#include "lxdr/evaluation.hpp"
#include "lxdr/json_io.hpp"
#include "lxdr/surrogate.hpp"

#include <httplib.h>

#include <algorithm>
#include <mutex>
#include <numeric>

namespace lxdr {

namespace {

struct ApiError {
  int status;
  std::string message;
  std::string where;
};

ApiResponse error_response(const ApiError& e) {
  return {e.status, {{"error", e.message}, {"where", e.where}}};
}

Json parse_body(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ApiError{400, "request body must be a JSON object", "body"};
  return j;
}

template <typename T>
T field(const Json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw ApiError{422, std::string("missing field '") + name + "'", name};
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw ApiError{422, std::string("field '") + name + "' has the wrong type", name};
  }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return field<T>(j, name);
}

Vector row_at(const Dataset& data, Index index, const char* where) {
  if (index < 0 || index >= data.rows()) {
    throw ApiError{422, "instance index " + std::to_string(index) + " out of range [0, " +
                            std::to_string(data.rows()) + ")", where};
  }
  return data.features.row(index).transpose();
}

Vector parse_vector(const Json& j, const Dataset& data, const char* where) {
  Vector x;
  try {
    x = vector_from_json(j);
  } catch (const std::exception&) {
    throw ApiError{422, "instance must be a list of numbers", where};
  }
  if (x.size() != data.cols()) {
    throw ApiError{422, "instance has " + std::to_string(x.size()) + " entries, expected " +
                            std::to_string(data.cols()), where};
  }
  if (!all_finite(x)) throw ApiError{422, "instance contains non-finite values", where};
  return x;
}

// "instance_index": n, "vector": [..], or "instance": n | [..]
Vector resolve_instance(const Json& req, const Dataset& data) {
  if (const auto it = req.find("vector"); it != req.end() && !it->is_null()) {
    return parse_vector(*it, data, "vector");
  }
  if (const auto it = req.find("instance"); it != req.end() && !it->is_null()) {
    if (it->is_number_integer()) return row_at(data, it->get<Index>(), "instance");
    return parse_vector(*it, data, "instance");
  }
  return row_at(data, field<Index>(req, "instance_index"), "instance_index");
}

// Feature indices sorted by |weight|, largest first; ties keep index order.
Json ranking(const Vector& w) {
  std::vector<Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&w](Index a, Index b) { return std::abs(w[a]) > std::abs(w[b]); });
  return order;
}

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const ApiError& e) {
    return error_response(e);
  } catch (const CsvError& e) {
    ApiResponse r = error_response({400, e.what(), "csv"});
    r.body["line"] = e.line();
    r.body["column"] = e.column();
    return r;
  } catch (const std::exception& e) {
    return error_response({422, e.what(), "body"});
  }
}

}  // namespace

std::shared_ptr<const Dataset> Service::dataset(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = datasets_.find(id);
  if (it == datasets_.end()) throw ApiError{404, "unknown dataset '" + id + "'", "dataset_id"};
  return it->second;
}

std::shared_ptr<const Service::ModelEntry> Service::model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = models_.find(id);
  if (it == models_.end()) throw ApiError{404, "unknown model '" + id + "'", "model_id"};
  return it->second;
}

std::shared_ptr<const RidgePredictor> Service::predictor(const std::string& model_id) const {
  std::shared_lock lock(mutex_);
  const auto it = predictors_.find(model_id);
  return it == predictors_.end() ? nullptr : it->second;
}

ApiResponse Service::create_dataset(const std::string& body, const std::string& content_type) {
  return guarded([&]() -> ApiResponse {
    Dataset d;
    if (content_type.rfind("text/csv", 0) == 0) {
      d = parse_csv_text(body, {}, "upload");
    } else {
      const Json req = parse_body(body);
      if (const auto name = optional_field<std::string>(req, "bundled")) {
        if (!is_bundled_name(*name)) throw ApiError{422, "unknown bundled dataset '" + *name + "'", "bundled"};
        d = load_bundled(*name);
      } else {
        CsvOptions options;
        options.has_header = req.value("has_header", true);
        options.target_column = optional_field<std::string>(req, "target_column");
        d = parse_csv_text(field<std::string>(req, "csv"), options, req.value("name", std::string("upload")));
      }
    }
    auto shared = std::make_shared<const Dataset>(std::move(d));
    std::string id;
    {
      std::unique_lock lock(mutex_);
      id = "ds-" + std::to_string(next_dataset_++);
      datasets_[id] = shared;
    }
    return {200,
            {{"dataset_id", id},
             {"name", shared->name},
             {"rows", shared->rows()},
             {"cols", shared->cols()},
             {"feature_names", shared->feature_names},
             {"has_target", shared->target.has_value()}}};
  });
}

ApiResponse Service::fit_model(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json req = parse_body(body);
    const auto data = dataset(field<std::string>(req, "dataset_id"));
    DrKind kind;
    try {
      kind = parse_dr_kind(field<std::string>(req, "method"));
    } catch (const std::invalid_argument& e) {
      throw ApiError{422, e.what(), "method"};
    }

    const auto n_components = optional_field<Index>(req, "n_components");
    const auto variance = optional_field<double>(req, "variance");
    if (n_components.has_value() == variance.has_value()) {
      throw ApiError{422, "give exactly one of n_components or variance", "n_components"};
    }
    Index n_reduced = 0;
    if (n_components) {
      n_reduced = *n_components;
      if (n_reduced < 1 || n_reduced > data->cols()) {
        throw ApiError{422, "n_components must be in [1, " + std::to_string(data->cols()) + "]", "n_components"};
      }
    } else {
      if (!(*variance > 0.0 && *variance <= 1.0)) throw ApiError{422, "variance must be in (0, 1]", "variance"};
      n_reduced = components_for_variance(pca_variance_ratios(data->features), *variance);
    }

    DrFitParams params;
    const Json p = req.value("params", Json::object());
    if (!p.is_object()) throw ApiError{422, "params must be an object", "params"};
    if (const auto g = optional_field<double>(p, "gamma")) {
      if (!(*g > 0.0)) throw ApiError{422, "gamma must be positive", "params.gamma"};
      params.gamma = *g;
    }
    if (const auto epochs = optional_field<int>(p, "epochs")) {
      if (*epochs < 1) throw ApiError{422, "epochs must be >= 1", "params.epochs"};
      params.autoencoder.epochs = *epochs;
    }
    const Seed seed = req.value("seed", Seed{42});

    auto entry = std::make_shared<ModelEntry>(ModelEntry{
        field<std::string>(req, "dataset_id"), data, fit_dr(kind, data->features, n_reduced, seed, params)});
    const DataMatrix embedding = entry->reducer.transform_rows(data->features);
    std::string id;
    {
      std::unique_lock lock(mutex_);
      id = "m-" + std::to_string(next_model_++);
      models_[id] = entry;
    }
    Json out = {{"model_id", id},
                {"kind", to_string(kind)},
                {"input_dims", entry->reducer.input_dims()},
                {"n_reduced", n_reduced},
                {"embedding", matrix_to_json(embedding)}};
    out["targets"] = data->target ? vector_to_json(*data->target) : Json(nullptr);
    return {200, out};
  });
}

ApiResponse Service::explain(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json req = parse_body(body);
    const auto entry = model(field<std::string>(req, "model_id"));
    const Dataset& data = *entry->dataset;
    const Vector x = resolve_instance(req, data);

    ExplainOptions options;
    try {
      options.neighborhood.generator = parse_neighbor_generator(req.value("ng", std::string("knn")));
    } catch (const std::invalid_argument& e) {
      throw ApiError{422, e.what(), "ng"};
    }
    options.neighborhood.k = optional_field<Index>(req, "k");
    options.neighborhood.seed = req.value("seed", Seed{42});
    options.neighborhood.perturbation_scale = req.value("scale", 1.0);
    options.auto_alpha = req.value("auto_alpha", true);
    options.alpha_default = req.value("alpha", 1.0);
    const Index k = options.neighborhood.resolve_k(data.rows());
    if (k < 1) throw ApiError{422, "k must be >= 1", "k"};
    if (options.neighborhood.generator == NeighborGenerator::knn && k > data.rows()) {
      throw ApiError{422, "k = " + std::to_string(k) + " exceeds the dataset rows (" +
                              std::to_string(data.rows()) + ")", "k"};
    }
    if (!(options.alpha_default >= 0.0)) throw ApiError{422, "alpha must be non-negative", "alpha"};

    const Explanation e = lxdr_explain(entry->reducer, data.features, x, options);
    Json out = to_json(e);
    out["model_id"] = req.at("model_id");
    out["reduced"] = vector_to_json(entry->reducer.transform(x));
    out["instance_difference"] = instance_difference(entry->reducer, e, x).value;
    if (const auto w = entry->reducer.intrinsic_weights()) {
      out["weights_difference"] = weights_difference(e, *w).value;
    }
    Json components = Json::array();
    for (Index c = 0; c < e.reduced_dims(); ++c) {
      const Vector row = e.slopes.row(c).transpose();
      components.push_back({{"component", c}, {"weights", vector_to_json(row)}, {"ranking", ranking(row)}});
    }
    out["components"] = std::move(components);
    out["feature_names"] = data.feature_names;
    return {200, out};
  });
}

ApiResponse Service::whatif(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json req = parse_body(body);
    const auto entry = model(field<std::string>(req, "model_id"));
    const Dataset& data = *entry->dataset;
    const Vector x = resolve_instance(req, data);
    const auto feature = field<Index>(req, "feature");
    if (feature < 0 || feature >= data.cols()) {
      throw ApiError{422, "feature " + std::to_string(feature) + " out of range [0, " +
                              std::to_string(data.cols()) + ")", "feature"};
    }
    double value = 0.0;
    if (req.value("to_mean", false)) {
      value = data.features.col(feature).mean();
    } else {
      value = field<double>(req, "value");
      if (!std::isfinite(value)) throw ApiError{422, "value must be finite", "value"};
    }
    const auto pred = predictor(req.at("model_id").get<std::string>());
    Json out = to_json(whatif_tweak(entry->reducer, pred.get(), x, feature, value));
    out["model_id"] = req.at("model_id");
    return {200, out};
  });
}

ApiResponse Service::fit_predictor(const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const Json req = parse_body(body);
    const std::string model_id = field<std::string>(req, "model_id");
    const auto entry = model(model_id);
    const Dataset& data = *entry->dataset;
    if (!data.target) throw ApiError{422, "dataset has no target column", "model_id"};
    const double alpha = req.value("alpha", 1.0);
    if (!(alpha >= 0.0)) throw ApiError{422, "alpha must be non-negative", "alpha"};
    auto pred = std::make_shared<const RidgePredictor>(
        ridge_predictor_fit(entry->reducer.transform_rows(data.features), *data.target, alpha));
    {
      std::unique_lock lock(mutex_);
      predictors_[model_id] = pred;
    }
    Json out = to_json(*pred);
    out["model_id"] = model_id;
    return {200, out};
  });
}

ApiResponse Service::handle(const std::string& method, const std::string& path,
                            const std::string& body, const std::string& content_type) {
  if (method == "POST") {
    if (path == "/api/datasets") return create_dataset(body, content_type);
    if (path == "/api/dr") return fit_model(body);
    if (path == "/api/explain") return explain(body);
    if (path == "/api/whatif") return whatif(body);
    if (path == "/api/predictor") return fit_predictor(body);
  }
  if (method == "GET" && path == "/api/health") return {200, {{"status", "ok"}}};
  return error_response({404, "no route for " + method + " " + path, "path"});
}

void mount_routes(httplib::Server& server, Service& service,
                  const std::optional<std::filesystem::path>& static_dir) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = service.handle(req.method, req.path, req.body,
                                         req.get_header_value("Content-Type"));
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  for (const char* path : {"/api/datasets", "/api/dr", "/api/explain", "/api/whatif", "/api/predictor"}) {
    server.Post(path, route);
  }
  server.Get("/api/health", route);
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace lxdr
