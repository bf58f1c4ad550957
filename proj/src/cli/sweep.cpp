#include <map>
#include <mutex>

#include "internal.hpp"
#include "kman/io.hpp"
#include "kman/parallel.hpp"

namespace kman::cli {

using detail::FieldReader;

std::size_t SweepSpec::product_size() const {
  return methods.size() * kernels.size() * epsilons.size() * lambdas.size() * rs.size() *
         (m_factor ? 1 : ms.size());
}

TrainOptions SweepSpec::options_at(std::size_t i) const {
  const std::size_t n_m = m_factor ? 1 : ms.size();
  TrainOptions o;
  const std::size_t im = i % n_m;
  i /= n_m;
  o.r = rs[i % rs.size()];
  i /= rs.size();
  o.lambda = lambdas[i % lambdas.size()];
  i /= lambdas.size();
  o.epsilon = epsilons[i % epsilons.size()];
  i /= epsilons.size();
  o.kernel = kernels[i % kernels.size()];
  i /= kernels.size();
  o.method = methods[i % methods.size()];
  o.m = m_factor ? *m_factor * o.r : ms[im];
  o.normalize = normalize;
  o.poly_c = poly_c;
  o.poly_rho = poly_rho;
  o.poly_ell = poly_ell;
  o.fm_weight = fm_weight;
  return o;
}

namespace {

template <class T>
std::vector<T> list_axis(FieldReader& in, const std::string& key, std::vector<T> fallback) {
  if (!in.has(key)) {
    in.ignore(key);
    return fallback;
  }
  const json& j = in.raw(key);
  try {
    std::vector<T> out = j.is_array() ? j.get<std::vector<T>>() : std::vector<T>{j.get<T>()};
    if (out.empty()) in.fail(key, "axis is empty");
    return out;
  } catch (const json::exception&) {
    in.fail(key, "has the wrong type (" + j.dump() + ")");
  }
}

/// Options with every field the method ignores reset, so equivalent configurations share
/// one key and one training run.
TrainOptions effective(TrainOptions o) {
  const TrainOptions defaults;
  if (o.method == Method::pod) {
    o.m = 0;
    o.lambda = 0.0;
    o.normalize = false;
  }
  if (o.method != Method::kernel) o.kernel.clear();
  if (!uses_epsilon(o)) o.epsilon = 0.0;
  if (o.kernel != "polynomial") {
    o.poly_c = defaults.poly_c;
    o.poly_rho.reset();
    o.poly_ell = defaults.poly_ell;
  }
  if (o.kernel != "quadratic") o.fm_weight.clear();
  return o;
}

ResultRow describe(const TrainOptions& o, MetricKind metric) {
  ResultRow row;
  row.method = std::string(to_string(o.method));
  row.r = std::to_string(o.r);
  row.m = std::to_string(o.method == Method::pod ? 0 : o.m);
  row.kernel = o.kernel;
  if (uses_epsilon(o)) row.epsilon = format_real(o.epsilon);
  if (o.method != Method::pod) row.lambda = format_real(o.lambda);
  row.metric = std::string(to_string(metric));
  return row;
}

json row_json(const ResultRow& row) {
  json j = json::object();
  const auto& cols = csv_columns();
  const std::vector<std::string> f{row.method, row.r,     row.m,     row.kernel,       row.epsilon, row.lambda,
                                   row.metric, row.value, row.train_time_s, row.source, row.error};
  for (std::size_t k = 0; k < cols.size(); ++k) j[cols[k]] = f[k];
  return j;
}

}  // namespace

SweepSpec sweep_spec_from_json(const json& j) {
  FieldReader in(j, "sweep spec");
  SweepSpec s;
  const auto methods = list_axis<std::string>(in, "methods", {"kernel"});
  s.methods.clear();
  for (const auto& m : methods) s.methods.push_back(parse_method(m));
  s.kernels = list_axis<std::string>(in, "kernels", s.kernels);
  for (const auto& k : s.kernels) {
    TrainOptions probe;
    probe.kernel = k;
    kernel_from_options(probe);  // UnknownKernel for a bad name
  }
  if (in.has("epsilon")) s.epsilons = detail::real_axis(in.raw("epsilon"), "sweep spec field 'epsilon'");
  else in.ignore("epsilon");
  if (in.has("lambda")) s.lambdas = detail::real_axis(in.raw("lambda"), "sweep spec field 'lambda'");
  else in.ignore("lambda");
  s.rs = list_axis<Eigen::Index>(in, "r", s.rs);
  if (in.has("m") && in.has("m_factor")) in.fail("m_factor", "cannot be combined with an m axis");
  s.ms = list_axis<Eigen::Index>(in, "m", s.ms);
  if (in.has("m_factor")) s.m_factor = in.require<Eigen::Index>("m_factor");
  else in.ignore("m_factor");
  s.normalize = in.get("normalize", s.normalize);
  s.poly_c = in.get("poly_c", s.poly_c);
  if (in.has("poly_rho")) s.poly_rho = in.require<double>("poly_rho");
  else in.ignore("poly_rho");
  s.poly_ell = in.get("poly_ell", s.poly_ell);
  s.fm_weight = in.get("fm_weight", s.fm_weight);
  if (in.has("metric")) s.metric = parse_metric(in.require<std::string>("metric"));
  else in.ignore("metric");
  s.split = in.get("split", s.split);
  in.finish();
  if (s.split != "train" && s.split != "test") in.fail("split", "must be 'train' or 'test'");
  for (auto r : s.rs) {
    if (r < 1) in.fail("r", "values must be >= 1");
  }
  if (s.m_factor && *s.m_factor < 1) in.fail("m_factor", "must be >= 1");
  return s;
}

SweepResult run_sweep(const Dataset& data, const SweepSpec& spec, const fs::path& csv,
                      const fs::path& summary) {
  const std::size_t total = spec.product_size();
  if (total == 0) throw Error(ErrorKind::InvalidConfig, "sweep has an empty axis");

  // Unique configurations in first-appearance order.
  std::vector<TrainOptions> unique;
  std::vector<std::size_t> slot_of(total);
  {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < total; ++i) {
      const TrainOptions o = effective(spec.options_at(i));
      const std::string key = to_json(o).dump();
      auto [it, fresh] = index.emplace(key, unique.size());
      if (fresh) unique.push_back(o);
      slot_of[i] = it->second;
    }
  }

  const SnapshotSet& truth = spec.split == "train" ? data.train : data.test;
  const MetricKind metric = spec.metric ? *spec.metric : default_metric(data.manifest);
  // One SVD per offset choice, shared read-only by every configuration.
  std::optional<Timed<PodFactorization>> factorization;
  std::string factorization_error;
  try {
    factorization.emplace(timed([&] {
      data.train.validate();
      return factorize(data.train, OffsetChoice::mean());
    }));
  } catch (const Error& e) {
    factorization_error = e.what();
  }

  std::vector<ResultRow> results(unique.size());
  parallel_for(unique.size(), [&](std::size_t u) {
    const TrainOptions& o = unique[u];
    ResultRow row = describe(o, metric);
    try {
      if (!factorization) throw Error(ErrorKind::RankDeficient, factorization_error);
      const TrainingConfig cfg = training_config(o);
      const auto fitted = timed([&] { return train(factorization->value, data.train, cfg); });
      row.m = std::to_string(fitted.value.m());
      row.value = format_real(evaluate(metric, truth, fitted.value).value);
      row.train_time_s = format_real(factorization->seconds + fitted.seconds);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    results[u] = std::move(row);
  });

  SweepResult out;
  out.rows.reserve(total);
  for (std::size_t i = 0; i < total; ++i) out.rows.push_back(results[slot_of[i]]);

  json best = json::object();
  std::map<std::string, double> best_value;
  std::size_t failed = 0;
  for (const auto& row : out.rows) {
    if (!row.error.empty()) {
      ++failed;
      continue;
    }
    const double v = std::stod(row.value);
    auto it = best_value.find(row.method);
    if (it == best_value.end() || v < it->second) {
      best_value[row.method] = v;
      best[row.method] = row_json(row);
    }
  }
  out.summary = json{{"dataset_hash", data.hash},
                     {"metric", to_string(metric)},
                     {"split", spec.split},
                     {"product_size", total},
                     {"unique_configurations", unique.size()},
                     {"rows", out.rows.size()},
                     {"failed", failed},
                     {"best", best},
                     {"tool_version", kToolVersion}};
  if (!csv.empty()) write_rows(csv, out.rows);
  if (!summary.empty()) io::write_json(summary, out.summary);
  return out;
}

SweepResult cmd_sweep(const fs::path& dataset, const fs::path& spec_file, const fs::path& csv,
                      const fs::path& summary) {
  const SweepSpec spec = sweep_spec_from_json(io::read_json(spec_file));
  return run_sweep(load_dataset(dataset), spec, csv, summary);
}

}  // namespace kman::cli
