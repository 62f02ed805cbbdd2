#include "lxdr/cli.hpp"

#include "lxdr/attribution.hpp"
#include "lxdr/data_io.hpp"
#include "lxdr/dr.hpp"
#include "lxdr/evaluation.hpp"
#include "lxdr/json_io.hpp"
#include "lxdr/service.hpp"
#include "lxdr/surrogate.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace lxdr {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  Seed seed = 42;
  std::string output;
};

struct DataArgs {
  std::string data;
  std::string target;
};

Dataset load_data(const DataArgs& a) {
  const std::filesystem::path p(a.data);
  CsvOptions options;
  if (!a.target.empty()) options.target_column = a.target;
  if (std::filesystem::exists(p)) return load_csv(p, options);
  if (is_bundled_name(a.data)) return load_bundled(a.data);
  throw DataLoadError("no such file or bundled dataset: '" + a.data + "'");
}

FittedDR load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataLoadError("cannot open model file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataLoadError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return fitted_dr_from_json(doc);
}

bool parse_double(std::string_view s, double& v) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

// A row index ("12") or an inline comma-separated vector ("0.1,0.2,...").
Vector resolve_instance(const std::string& spec, const Dataset& data) {
  if (spec.find(',') == std::string::npos) {
    long long row = 0;
    const auto [p, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), row);
    if (ec == std::errc() && p == spec.data() + spec.size()) {
      if (row < 0 || row >= data.rows()) {
        throw std::out_of_range("instance row " + std::to_string(row) + " out of range [0, " +
                                std::to_string(data.rows()) + ")");
      }
      return data.features.row(static_cast<Index>(row)).transpose();
    }
  }
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    double v = 0.0;
    if (!parse_double(cell, v)) throw std::invalid_argument("instance: '" + cell + "' is not a number");
    values.push_back(v);
  }
  if (static_cast<Index>(values.size()) != data.cols()) {
    throw ShapeError("instance has " + std::to_string(values.size()) + " values, data has " +
                     std::to_string(data.cols()) + " features");
  }
  Vector x = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  require_finite(x, "instance");
  return x;
}

void check_model_matches(const FittedDR& model, const Dataset& data) {
  if (model.input_dims() != data.cols()) {
    throw ShapeError("model expects " + std::to_string(model.input_dims()) + " features, data has " +
                     std::to_string(data.cols()));
  }
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataLoadError("cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

// --- fit ---------------------------------------------------------------------

struct FitArgs {
  DataArgs data;
  std::string method;
  std::optional<Index> components;
  std::optional<double> variance;
  std::optional<double> gamma;
  std::optional<int> epochs;
};

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (a.components.has_value() == a.variance.has_value()) {
    throw UsageError("fit: give exactly one of --components or --variance");
  }
  const Dataset data = load_data(a.data);
  const DrKind kind = parse_dr_kind(a.method);
  Index n = 0;
  if (a.components) {
    n = *a.components;
    if (n > data.cols()) {
      throw std::invalid_argument("--components " + std::to_string(n) + " exceeds the " +
                                  std::to_string(data.cols()) + " features");
    }
  } else {
    n = components_for_variance(pca_variance_ratios(data.features), *a.variance);
  }
  DrFitParams params;
  params.gamma = a.gamma;
  if (a.epochs) params.autoencoder.epochs = *a.epochs;
  const FittedDR model = fit_dr(kind, data.features, n, g.seed, params);
  Output o(g.output, out);
  *o << to_json(model).dump() << '\n';
  err << "fitted " << to_string(kind) << ": " << data.cols() << " -> " << n << " dims\n";
  return 0;
}

// --- explain -----------------------------------------------------------------

struct ExplainArgs {
  std::string model;
  DataArgs data;
  std::string instance;
  std::string ng = "knn";
  std::optional<Index> k;
  bool auto_alpha = false;
  double alpha = 1.0;
  double scale = 1.0;
  bool reference_pca = false;
};

int cmd_explain(const ExplainArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  const FittedDR model = load_model(a.model);
  const Dataset data = load_data(a.data);
  check_model_matches(model, data);
  const Vector x = resolve_instance(a.instance, data);

  ExplainOptions options;
  options.neighborhood.generator = parse_neighbor_generator(a.ng);
  options.neighborhood.k = a.k;
  options.neighborhood.seed = g.seed;
  options.neighborhood.perturbation_scale = a.scale;
  options.auto_alpha = a.auto_alpha;
  options.alpha_default = a.alpha;

  const Explanation e = lxdr_explain(model, data.features, x, options);
  Json doc = to_json(e);
  doc["reduced"] = vector_to_json(model.transform(x));
  doc["instance_difference"] = instance_difference(model, e, x).value;
  if (a.reference_pca) {
    const auto w = model.intrinsic_weights();
    if (!w) throw std::invalid_argument("--reference-pca needs a pca model");
    doc["weights_difference"] = weights_difference(e, *w).value;
  }
  Output o(g.output, out);
  *o << doc.dump() << '\n';
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string suite;
  bool no_timing = false;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<Index> max_instances;
  std::vector<Index> features;
  std::optional<Index> queries;
  std::optional<int> epochs;
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  ExperimentReport report;
  if (a.suite == "tables") {
    TableConfig config;
    config.seed = g.seed;
    config.record_timing = !a.no_timing;
    config.threads = a.threads;
    config.max_instances = a.max_instances;
    if (a.epochs) config.autoencoder.epochs = *a.epochs;
    report = run_table_experiment(bundled_table_datasets(g.seed), config);
  } else {
    ScalingConfig config;
    config.seed = g.seed;
    config.record_timing = !a.no_timing;
    if (!a.features.empty()) config.features = a.features;
    if (a.queries) config.queries = *a.queries;
    report = run_scaling_experiment(config);
  }
  Output o(g.output, out);
  report.write_csv(*o);
  int status = 0;
  for (const auto& r : report.rows) {
    if (r.n_instances == 0) {
      err << "error: every instance failed for " << r.dataset << '/' << r.dr_method << '/'
          << r.explainer << '\n';
      status = 1;
    } else if (r.n_failures > 0) {
      err << "warning: " << r.n_failures << " failed instances in " << r.dataset << '/'
          << r.dr_method << '/' << r.explainer << '\n';
    }
  }
  return status;
}

// --- whatif ------------------------------------------------------------------

struct WhatifArgs {
  std::string model;
  DataArgs data;
  std::string instance;
  Index feature = 0;
  std::optional<double> value;
  bool to_mean = false;
  bool predictor = false;
  double predictor_alpha = 1.0;
};

int cmd_whatif(const WhatifArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  if (a.value.has_value() == a.to_mean) throw UsageError("whatif: give exactly one of --value or --to-mean");
  const FittedDR model = load_model(a.model);
  const Dataset data = load_data(a.data);
  check_model_matches(model, data);
  const Vector x = resolve_instance(a.instance, data);
  if (a.feature < 0 || a.feature >= data.cols()) {
    throw std::out_of_range("feature " + std::to_string(a.feature) + " out of range [0, " +
                            std::to_string(data.cols()) + ")");
  }
  const double value = a.to_mean ? data.features.col(a.feature).mean() : *a.value;

  std::optional<RidgePredictor> pred;
  if (a.predictor) {
    if (!data.target) throw DataLoadError("--predictor needs a dataset with a target column");
    pred = ridge_predictor_fit(model.transform_rows(data.features), *data.target, a.predictor_alpha);
  }
  const WhatIfResult r = whatif_tweak(model, pred ? &*pred : nullptr, x, a.feature, value);
  Output o(g.output, out);
  *o << to_json(r).dump() << '\n';
  return 0;
}

// --- serve -------------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string static_dir;
};

int cmd_serve(const ServeArgs& a, std::ostream& err) {
  Service service;
  httplib::Server server;
  std::optional<std::filesystem::path> dir;
  if (!a.static_dir.empty()) dir = a.static_dir;
  mount_routes(server, service, dir);
  err << "listening on http://" << a.host << ':' << a.port << '\n';
  if (!server.listen(a.host, a.port)) {
    err << "error: cannot bind " << a.host << ':' << a.port << '\n';
    return 1;
  }
  return 0;
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.data, "bundled name (iris, diabetes, digits) or CSV path")->required();
  cmd->add_option("--target", d.target, "target column of a CSV (name or 0-based index)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lxdr: local linear explanations of dimensionality reduction", "lxdr"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "random seed")->envname("LXDR_SEED")->capture_default_str();
  app.add_option("--output,-o", g.output, "write the artifact here instead of stdout");

  const std::vector<std::string> methods{"pca", "kpca", "kpca-rbf", "ae", "autoencoder"};

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a reducer and write it as JSON");
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--method", fit.method, "pca | kpca | ae")->required()->check(CLI::IsMember(methods));
  auto* comp = fit_cmd->add_option("--components", fit.components, "reduced dimensions")
                   ->check(CLI::Range(Index{1}, Index{1} << 30));
  auto* var = fit_cmd->add_option("--variance", fit.variance, "PCA variance to keep, e.g. 0.95")
                  ->check(CLI::Range(1e-12, 1.0));
  comp->excludes(var);
  fit_cmd->add_option("--gamma", fit.gamma, "RBF kernel width (kpca; default 1/features)")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--epochs", fit.epochs, "training epochs (ae)")->check(CLI::PositiveNumber);

  ExplainArgs ex;
  auto* ex_cmd = app.add_subcommand("explain", "LXDR explanation of one instance");
  ex_cmd->add_option("--model", ex.model, "model JSON from `fit`")->required();
  add_data_options(ex_cmd, ex.data);
  ex_cmd->add_option("--instance", ex.instance, "row index or comma-separated vector")->required();
  ex_cmd->add_option("--ng", ex.ng, "knn | perturb")->check(CLI::IsMember({"knn", "perturb", "perturbation", "lime"}));
  ex_cmd->add_option("--k", ex.k, "neighbors (default 10% of rows)")->check(CLI::PositiveNumber);
  ex_cmd->add_flag("--auto-alpha", ex.auto_alpha, "pick alpha on held-out neighbors");
  ex_cmd->add_option("--alpha", ex.alpha, "ridge alpha")->check(CLI::NonNegativeNumber);
  ex_cmd->add_option("--scale", ex.scale, "perturbation scale")->check(CLI::PositiveNumber);
  ex_cmd->add_flag("--reference-pca", ex.reference_pca, "also report the weights difference");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "run an experiment suite and write a CSV report");
  ev_cmd->add_option("--suite", ev.suite, "tables | scaling")->required()->check(CLI::IsMember({"tables", "scaling"}));
  ev_cmd->add_flag("--no-timing", ev.no_timing, "write 0 for mean_seconds");
  ev_cmd->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);
  ev_cmd->add_option("--max-instances", ev.max_instances, "tables: explain at most this many rows")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_option("--features", ev.features, "scaling: feature counts")->delimiter(',');
  ev_cmd->add_option("--queries", ev.queries, "scaling: queries per dataset")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--epochs", ev.epochs, "tables: autoencoder epochs")->check(CLI::PositiveNumber);

  WhatifArgs wi;
  auto* wi_cmd = app.add_subcommand("whatif", "tweak one feature and re-project");
  wi_cmd->add_option("--model", wi.model)->required();
  add_data_options(wi_cmd, wi.data);
  wi_cmd->add_option("--instance", wi.instance, "row index or comma-separated vector")->required();
  wi_cmd->add_option("--feature", wi.feature, "0-based feature index")->required();
  auto* val = wi_cmd->add_option("--value", wi.value);
  auto* mean = wi_cmd->add_flag("--to-mean", wi.to_mean, "use the feature's dataset mean");
  val->excludes(mean);
  wi_cmd->add_flag("--predictor", wi.predictor, "fit a ridge on the target and report predictions");
  wi_cmd->add_option("--predictor-alpha", wi.predictor_alpha)->check(CLI::NonNegativeNumber);

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "HTTP JSON API");
  sv_cmd->add_option("--host", sv.host)->capture_default_str();
  sv_cmd->add_option("--port", sv.port)->check(CLI::Range(1, 65535))->capture_default_str();
  sv_cmd->add_option("--static-dir", sv.static_dir, "serve these files under /");

  std::vector<std::string> argv_store{"lxdr"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, g, out, err);
    if (*ex_cmd) return cmd_explain(ex, g, out, err);
    if (*ev_cmd) return cmd_eval(ev, g, out, err);
    if (*wi_cmd) return cmd_whatif(wi, g, out, err);
    if (*sv_cmd) return cmd_serve(sv, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace lxdr
