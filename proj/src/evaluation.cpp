#include "lxdr/evaluation.hpp"

#include "lxdr/data_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace lxdr {

std::string_view to_string(Metric m) {
  return m == Metric::instance_difference ? "instance_difference" : "weights_difference";
}

MetricResult weights_difference(const Explanation& e, const Matrix& reference) {
  return MetricResult::make(Metric::weights_difference, euclidean_distance(e.slopes, reference));
}

// --- Synthetic data ----------------------------------------------------------

namespace {

Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign-fix against R's diagonal so Q is Haar distributed.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

DataMatrix synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.n_features < 10 || spec.n_features > 250 || spec.n_features % 10 != 0) {
    throw std::invalid_argument("synthetic_dataset: n_features must be a multiple of 10 in [10, 250]");
  }
  if (spec.n_rows < 2) throw std::invalid_argument("synthetic_dataset: n_rows must be >= 2");
  if (!(spec.eigen_decay > 0.0 && spec.eigen_decay < 1.0)) {
    throw std::invalid_argument("synthetic_dataset: eigen_decay must be in (0, 1)");
  }
  const Index f = spec.n_features;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataMatrix z(spec.n_rows, f);
  for (Index i = 0; i < spec.n_rows; ++i)
    for (Index j = 0; j < f; ++j) z(i, j) = normal(rng);
  const Matrix q = random_orthogonal(f, rng);
  const Matrix q_prime = random_orthogonal(f, rng);
  Vector s(f);
  for (Index j = 0; j < f; ++j) s[j] = std::pow(spec.eigen_decay, static_cast<double>(j));
  return z * (q.transpose() * s.asDiagonal() * q_prime);
}

// --- Reports -----------------------------------------------------------------

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

void ExperimentReport::write_csv(std::ostream& out) const {
  out << csv_header << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.dr_method << ',' << r.explainer << ',' << r.n_features << ','
        << r.n_reduced << ',' << r.k << ',' << to_string(r.metric) << ','
        << format_number(r.mean_value) << ',' << format_number(r.mean_value_x100) << ','
        << format_number(r.mean_seconds) << ',' << r.n_failures << '\n';
  }
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

const ReportRow* ExperimentReport::find(std::string_view dataset, std::string_view dr_method,
                                        std::string_view explainer, Metric metric,
                                        std::optional<Index> k) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset && r.dr_method == dr_method && r.explainer == explainer &&
        r.metric == metric && (!k || r.k == *k)) {
      return &r;
    }
  }
  return nullptr;
}

namespace {

using Clock = std::chrono::steady_clock;

struct InstanceOutcome {
  double instance_difference = 0.0;
  double weights_difference = 0.0;
  double seconds = 0.0;
  bool failed = false;
};

struct Aggregate {
  double instance_sum = 0.0;
  double weights_sum = 0.0;
  double seconds_sum = 0.0;
  Index count = 0;
  Index failures = 0;

  void add(const InstanceOutcome& o) {
    if (o.failed) {
      ++failures;
      return;
    }
    instance_sum += o.instance_difference;
    weights_sum += o.weights_difference;
    seconds_sum += o.seconds;
    ++count;
  }
  double mean(double sum) const {
    return count > 0 ? sum / static_cast<double>(count) : std::nan("");
  }
};

// Evaluates `work(i)` for i in [0, n) and returns the outcomes in index order.
template <typename Work>
std::vector<InstanceOutcome> evaluate_all(Index n, unsigned threads, Work work) {
  std::vector<InstanceOutcome> out(static_cast<std::size_t>(n));
  auto run = [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = work(i);
      } catch (const std::exception&) {
        out[static_cast<std::size_t>(i)].failed = true;
      }
    }
  };
  const auto workers = static_cast<Index>(std::max(1u, threads));
  if (workers == 1 || n < 2) {
    run(0, n);
    return out;
  }
  std::vector<std::jthread> pool;
  const Index chunk = (n + workers - 1) / workers;
  for (Index begin = 0; begin < n; begin += chunk) {
    pool.emplace_back(run, begin, std::min(n, begin + chunk));
  }
  pool.clear();
  return out;
}

ReportRow make_row(const std::string& dataset, DrKind kind, const char* explainer, Index n_features,
                   Index n_reduced, Index k, Metric metric, double mean, double seconds,
                   Index count, Index failures) {
  ReportRow r;
  r.dataset = dataset;
  r.dr_method = std::string(to_string(kind));
  r.explainer = explainer;
  r.n_features = n_features;
  r.n_reduced = n_reduced;
  r.k = k;
  r.metric = metric;
  r.mean_value = mean;
  r.mean_value_x100 = 100.0 * mean;
  r.mean_seconds = seconds;
  r.n_instances = count;
  r.n_failures = failures;
  return r;
}

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

ExperimentReport run_table_experiment(const std::vector<TableDataset>& datasets,
                                      const TableConfig& config) {
  ExperimentReport report;
  for (const auto& ds : datasets) {
    const DataMatrix& pool = ds.neighbor_pool ? *ds.neighbor_pool : ds.data;
    const Index n_reduced =
        ds.n_reduced > 0 ? ds.n_reduced
                         : components_for_variance(pca_variance_ratios(ds.data), config.variance_threshold);
    const Index n_instances =
        config.max_instances ? std::min(*config.max_instances, ds.data.rows()) : ds.data.rows();

    for (const DrKind kind : config.methods) {
      DrFitParams params;
      params.autoencoder = config.autoencoder;
      const FittedDR reducer = fit_dr(kind, ds.data, n_reduced, config.seed, params);
      const auto reference = reducer.intrinsic_weights();

      const auto global_start = Clock::now();
      const Explanation global = gxdr_explain(reducer, ds.data, config.alpha_default);
      const double global_seconds = config.record_timing ? elapsed(global_start) : 0.0;

      ExplainOptions options;
      options.neighborhood.generator = NeighborGenerator::knn;
      options.neighborhood.k = ds.k;
      options.neighborhood.seed = config.seed;
      options.auto_alpha = config.auto_alpha;
      options.alpha_default = config.alpha_default;

      const auto local = evaluate_all(n_instances, config.threads, [&](Index i) {
        const Vector x = ds.data.row(i).transpose();
        InstanceOutcome o;
        const auto start = Clock::now();
        const Explanation e = lxdr_explain(reducer, pool, x, options);
        o.seconds = config.record_timing ? elapsed(start) : 0.0;
        o.instance_difference = instance_difference(reducer, e, x).value;
        if (reference) o.weights_difference = weights_difference(e, *reference).value;
        return o;
      });
      const auto globals = evaluate_all(n_instances, config.threads, [&](Index i) {
        InstanceOutcome o;
        o.instance_difference = instance_difference(reducer, global, ds.data.row(i).transpose()).value;
        return o;
      });

      Aggregate lx, gx;
      for (const auto& o : local) lx.add(o);
      for (const auto& o : globals) gx.add(o);

      const Index n = ds.data.cols();
      report.rows.push_back(make_row(ds.name, kind, "lxdr", n, n_reduced, ds.k,
                                     Metric::instance_difference, lx.mean(lx.instance_sum),
                                     lx.mean(lx.seconds_sum), lx.count, lx.failures));
      report.rows.push_back(make_row(ds.name, kind, "gxdr", n, n_reduced, 0,
                                     Metric::instance_difference, gx.mean(gx.instance_sum),
                                     global_seconds, gx.count, gx.failures));
      if (reference) {
        report.rows.push_back(make_row(ds.name, kind, "lxdr", n, n_reduced, ds.k,
                                       Metric::weights_difference, lx.mean(lx.weights_sum),
                                       lx.mean(lx.seconds_sum), lx.count, lx.failures));
        report.rows.push_back(make_row(ds.name, kind, "gxdr", n, n_reduced, 0,
                                       Metric::weights_difference,
                                       weights_difference(global, *reference).value, global_seconds,
                                       1, 0));
      }
    }
  }
  return report;
}

std::vector<TableDataset> bundled_table_datasets(Seed seed) {
  std::vector<TableDataset> out;
  out.push_back({"iris", load_bundled("iris").features, std::nullopt, 50, 3});
  out.push_back({"diabetes", load_bundled("diabetes").features, std::nullopt, 150, 8});
  // intensities 0..16 -> [0, 1]
  Dataset digits = load_bundled("digits");
  digits.features /= 16.0;
  out.push_back({"digits", subsample(digits, 0.25, seed).features, digits.features, 750, 25});
  return out;
}

std::vector<Index> ScalingConfig::default_feature_grid() {
  std::vector<Index> f;
  for (Index n = 10; n <= 250; n += 10) f.push_back(n);
  return f;
}

ExperimentReport run_scaling_experiment(const ScalingConfig& config) {
  ExperimentReport report;
  for (const Index f : config.features) {
    SyntheticSpec spec;
    spec.n_rows = config.n_rows;
    spec.n_features = f;
    spec.eigen_decay = config.eigen_decay;
    spec.seed = config.seed + static_cast<Seed>(f);
    const DataMatrix data = synthetic_dataset(spec);
    const std::string name = "synthetic-" + std::to_string(f);

    const Index n_reduced = components_for_variance(pca_variance_ratios(data), 0.95);
    const FittedDR reducer(pca_fit(data, n_reduced), config.seed);
    const Matrix reference = *reducer.intrinsic_weights();

    std::vector<Index> queries(static_cast<std::size_t>(data.rows()));
    std::iota(queries.begin(), queries.end(), Index{0});
    std::mt19937_64 rng(spec.seed);
    std::shuffle(queries.begin(), queries.end(), rng);
    queries.resize(static_cast<std::size_t>(std::min(config.queries, data.rows())));
    std::sort(queries.begin(), queries.end());

    for (const Index k : config.k_values) {
      ExplainOptions options;
      options.neighborhood.k = k;
      options.neighborhood.seed = config.seed;
      options.auto_alpha = config.auto_alpha;
      Aggregate agg;
      for (const Index q : queries) {
        InstanceOutcome o;
        try {
          const Vector x = data.row(q).transpose();
          const auto start = Clock::now();
          const Explanation e = lxdr_explain(reducer, data, x, options);
          o.seconds = config.record_timing ? elapsed(start) : 0.0;
          o.instance_difference = instance_difference(reducer, e, x).value;
          o.weights_difference = weights_difference(e, reference).value;
        } catch (const std::exception&) {
          o.failed = true;
        }
        agg.add(o);
      }
      report.rows.push_back(make_row(name, DrKind::pca, "lxdr", f, n_reduced, k,
                                     Metric::weights_difference, agg.mean(agg.weights_sum),
                                     agg.mean(agg.seconds_sum), agg.count, agg.failures));
      report.rows.push_back(make_row(name, DrKind::pca, "lxdr", f, n_reduced, k,
                                     Metric::instance_difference, agg.mean(agg.instance_sum),
                                     agg.mean(agg.seconds_sum), agg.count, agg.failures));
    }

    if (config.include_global) {
      const auto start = Clock::now();
      const Explanation global = gxdr_explain(reducer, data, 1.0);
      const double seconds = config.record_timing ? elapsed(start) : 0.0;
      Aggregate agg;
      for (const Index q : queries) {
        InstanceOutcome o;
        o.instance_difference = instance_difference(reducer, global, data.row(q).transpose()).value;
        agg.add(o);
      }
      report.rows.push_back(make_row(name, DrKind::pca, "gxdr", f, n_reduced, 0,
                                     Metric::weights_difference,
                                     weights_difference(global, reference).value, seconds, 1, 0));
      report.rows.push_back(make_row(name, DrKind::pca, "gxdr", f, n_reduced, 0,
                                     Metric::instance_difference, agg.mean(agg.instance_sum),
                                     seconds, agg.count, agg.failures));
    }
  }
  return report;
}

}  // namespace lxdr
