#pragma once

// JSON HTTP API over an in-memory registry of datasets and fitted reducers.
//
//   POST /api/datasets   {"bundled": name} | {"csv": text, ...} | raw text/csv body
//   POST /api/dr         fit a reducer, returns the full embedding
//   POST /api/explain    LXDR explanation of one instance
//   POST /api/whatif     tweak one feature and re-project
//   POST /api/predictor  attach a ridge predictor (reduced data -> target) to a model
//
// Error bodies are {"error": message, "where": field}.

#include "lxdr/attribution.hpp"
#include "lxdr/data_io.hpp"
#include "lxdr/dr.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace lxdr {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  ApiResponse create_dataset(const std::string& body, const std::string& content_type);
  ApiResponse fit_model(const std::string& body);
  ApiResponse explain(const std::string& body);
  ApiResponse whatif(const std::string& body);
  ApiResponse fit_predictor(const std::string& body);

  /// Routes a request to the matching endpoint; 404 for unknown paths.
  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body,
                     const std::string& content_type = "application/json");

 private:
  struct ModelEntry {
    std::string dataset_id;
    std::shared_ptr<const Dataset> dataset;
    FittedDR reducer;
  };

  std::shared_ptr<const Dataset> dataset(const std::string& id) const;
  std::shared_ptr<const ModelEntry> model(const std::string& id) const;
  std::shared_ptr<const RidgePredictor> predictor(const std::string& model_id) const;

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::map<std::string, std::shared_ptr<const ModelEntry>> models_;
  std::map<std::string, std::shared_ptr<const RidgePredictor>> predictors_;
  long next_dataset_ = 1;
  long next_model_ = 1;
};

/// Registers the API routes (and permissive CORS) on `server`; serves `static_dir` under /.
void mount_routes(httplib::Server& server, Service& service,
                  const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace lxdr
