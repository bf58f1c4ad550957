#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kman/manifold.hpp"
#include "kman/metrics.hpp"

namespace kman::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = KMAN_VERSION;

/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

// --- run manifests ------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  json config = json::object();
  std::string dataset_hash;
  Eigen::Index r = 0;
  Eigen::Index m = 0;
  json kernel;  // null when the method has no kernel
  double lambda = 0.0;
  std::map<std::string, double> metrics;
  std::map<std::string, double> wall_times;
  std::string tool_version = kToolVersion;
  std::string timestamp;

  bool operator==(const RunManifest&) const = default;
};

json to_json(const RunManifest& run);
RunManifest run_manifest_from_json(const json& j);

// --- datasets -----------------------------------------------------------------------------

/// A dataset directory holds train.bin, test.bin (each with a .json sidecar) and
/// manifest.json. `path` may also name a single snapshot file.
struct Dataset {
  SnapshotSet train;
  SnapshotSet test;
  std::string hash;
  json manifest;
};

Dataset load_dataset(const fs::path& path);
/// Loads one split: "train" or "test" from a dataset directory, or the file itself.
SnapshotSet load_split(const fs::path& path, const std::string& split);
std::string dataset_hash(const fs::path& path);
/// The metric conventionally reported for a dataset: rel_l2_trajectory for advdiff (whose
/// trajectories start from a zero state), mean_rel_l2 otherwise.
MetricKind default_metric(const json& dataset_manifest);
MetricKind default_metric(const fs::path& dataset);

/// Fills defaults and rejects unknown or out-of-range fields with the field name in the
/// message. `problem` is "surface_heating" or "advdiff".
json resolve_dataset_config(const std::string& problem, const json& config);

/// Generates the dataset described by `config_path` (a config file or an existing dataset
/// manifest) into `out_dir`; returns the written manifest.
json cmd_generate(const std::string& problem, const fs::path& config_path, const fs::path& out_dir);
json generate_dataset(const std::string& problem, const json& config, const fs::path& out_dir);

// --- training -----------------------------------------------------------------------------

struct TrainOptions {
  Method method = Method::kernel;
  Eigen::Index r = 1;
  Eigen::Index m = 1;
  std::string kernel = "gaussian";  // RBF name, "polynomial" or "quadratic"
  double epsilon = 1.0;
  double lambda = 0.0;
  bool normalize = false;
  double poly_c = 1.0;
  std::optional<double> poly_rho;  // unset binds to 1/r
  int poly_ell = 2;
  /// Weight of the quadratic feature-map kernel: "identity", "scaled_identity", or empty
  /// for scaled_identity when normalizing and identity otherwise.
  std::string fm_weight;
  std::string offset = "mean";  // "mean" or "zero"

  bool operator==(const TrainOptions&) const = default;
};

json to_json(const TrainOptions& opts);
TrainOptions train_options_from_json(const json& j);
KernelSpec kernel_from_options(const TrainOptions& opts);
TrainingConfig training_config(const TrainOptions& opts);
/// True when the epsilon field affects the configuration.
bool uses_epsilon(const TrainOptions& opts);

/// Trains on the train split of `dataset`, writes the manifold directory plus run.json.
RunManifest cmd_train(const fs::path& dataset, const TrainOptions& opts, const fs::path& out_dir);

// --- evaluation and results CSV -----------------------------------------------------------

struct ResultRow {
  std::string method;
  std::string r;
  std::string m;
  std::string kernel;
  std::string epsilon;
  std::string lambda;
  std::string metric;
  std::string value;
  std::string train_time_s;
  std::string source = "kman";
  std::string error;

  bool operator==(const ResultRow&) const = default;
};

const std::vector<std::string>& csv_columns();
std::string format_real(double x);
void append_rows(const fs::path& csv, const std::vector<ResultRow>& rows);
void write_rows(const fs::path& csv, const std::vector<ResultRow>& rows);
/// Throws SchemaError for a missing or wrong header, ragged rows, or no data rows.
std::vector<ResultRow> read_rows(const fs::path& csv);

struct EvaluateResult {
  ErrorReport report;
  ResultRow row;
};

/// Evaluates a saved manifold on one split of a dataset and appends a row to `csv`
/// (skipped when `csv` is empty). An unset metric uses default_metric(dataset).
EvaluateResult cmd_evaluate(const fs::path& manifold_dir, const fs::path& dataset,
                            std::optional<MetricKind> metric, const fs::path& csv,
                            const std::string& split = "test");

// --- sweeps -------------------------------------------------------------------------------

struct SweepSpec {
  std::vector<Method> methods{Method::kernel};
  std::vector<std::string> kernels{"gaussian"};
  std::vector<double> epsilons{1.0};
  std::vector<double> lambdas{0.0};
  std::vector<Eigen::Index> rs{1};
  std::vector<Eigen::Index> ms{1};
  std::optional<Eigen::Index> m_factor;  // m = m_factor * r replaces the m axis
  bool normalize = false;
  double poly_c = 1.0;
  std::optional<double> poly_rho;
  int poly_ell = 2;
  std::string fm_weight;
  std::optional<MetricKind> metric;  // unset: default_metric of the dataset
  std::string split = "test";

  /// Product of all axis lengths; the m axis counts once when m_factor is set.
  std::size_t product_size() const;
  /// Options for product index i; methods vary slowest, then kernels, epsilon, lambda, r, m.
  TrainOptions options_at(std::size_t i) const;
};

/// Axis values may be lists or {"logspace": [lo, hi, n]} / {"linspace": [lo, hi, n]}.
SweepSpec sweep_spec_from_json(const json& j);

struct SweepResult {
  std::vector<ResultRow> rows;  // product-index order
  json summary;
};

/// Runs the full product in parallel; a failing configuration yields a row with its error
/// column set. Writes `csv` (overwriting) and `summary` when the paths are non-empty.
SweepResult run_sweep(const Dataset& data, const SweepSpec& spec, const fs::path& csv = {},
                      const fs::path& summary = {});
SweepResult cmd_sweep(const fs::path& dataset, const fs::path& spec_file, const fs::path& csv,
                      const fs::path& summary);

// --- reports ------------------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

struct Plot {
  std::string name;  // file stem
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = true;
  std::vector<Series> series;
};

/// Best (minimum) value per x for each method/kernel/source series, over error-free rows.
Plot error_plot(const std::vector<ResultRow>& rows, const std::string& axis);
Plot singular_value_plot(const Vector& singular_values);
std::string render_svg(const Plot& plot);
std::string markdown_table(const std::vector<ResultRow>& rows);

struct ReportOutput {
  std::vector<Plot> plots;
  std::vector<fs::path> files;
};

/// Reads the CSV and writes error_vs_r.svg, error_vs_m.svg, error_vs_lambda.svg,
/// results.md and, when `manifold_dir` is given, singular_values.svg into `out_dir`.
ReportOutput cmd_report(const fs::path& csv, const fs::path& out_dir,
                        const std::optional<fs::path>& manifold_dir = std::nullopt);

}  // namespace kman::cli
