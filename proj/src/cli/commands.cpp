#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "internal.hpp"
#include "kman/io.hpp"

namespace kman::cli {

using detail::FieldReader;

json to_json(const TrainOptions& o) {
  return json{{"method", to_string(o.method)},
              {"r", o.r},
              {"m", o.m},
              {"kernel", o.kernel},
              {"epsilon", o.epsilon},
              {"lambda", o.lambda},
              {"normalize", o.normalize},
              {"poly_c", o.poly_c},
              {"poly_rho", o.poly_rho ? json(*o.poly_rho) : json(nullptr)},
              {"poly_ell", o.poly_ell},
              {"fm_weight", o.fm_weight},
              {"offset", o.offset}};
}

TrainOptions train_options_from_json(const json& j) {
  // A run manifest carries the options under "config".
  if (j.is_object() && j.contains("command") && j.contains("config")) {
    return train_options_from_json(j.at("config"));
  }
  FieldReader in(j, "training options");
  TrainOptions o;
  o.method = parse_method(in.get<std::string>("method", std::string(to_string(o.method))));
  o.r = in.get("r", o.r);
  o.m = in.get("m", o.m);
  o.kernel = in.get("kernel", o.kernel);
  o.epsilon = in.get("epsilon", o.epsilon);
  o.lambda = in.get("lambda", o.lambda);
  o.normalize = in.get("normalize", o.normalize);
  o.poly_c = in.get("poly_c", o.poly_c);
  if (in.has("poly_rho")) o.poly_rho = in.require<double>("poly_rho");
  else in.ignore("poly_rho");
  o.poly_ell = in.get("poly_ell", o.poly_ell);
  o.fm_weight = in.get("fm_weight", o.fm_weight);
  o.offset = in.get("offset", o.offset);
  in.ignore("dataset");
  in.finish();
  return o;
}

KernelSpec kernel_from_options(const TrainOptions& o) {
  if (o.kernel == "polynomial") {
    return {PolynomialKernel{o.poly_c, o.poly_rho, o.poly_ell}, std::nullopt};
  }
  if (o.kernel == "quadratic") {
    FeatureMapWeight w = o.normalize ? FeatureMapWeight::scaled_identity() : FeatureMapWeight::identity();
    if (o.fm_weight == "identity") w = FeatureMapWeight::identity();
    else if (o.fm_weight == "scaled_identity") w = FeatureMapWeight::scaled_identity();
    else if (!o.fm_weight.empty()) {
      throw Error(ErrorKind::InvalidConfig, "fm_weight must be identity or scaled_identity, got '" +
                                                o.fm_weight + "'");
    }
    return {FeatureMapKernel{FeatureMap{}, w}, std::nullopt};
  }
  return {RbfFamily{parse_rbf_kind(o.kernel), o.epsilon}, std::nullopt};
}

bool uses_epsilon(const TrainOptions& o) {
  return o.method == Method::kernel && o.kernel != "polynomial" && o.kernel != "quadratic";
}

TrainingConfig training_config(const TrainOptions& o) {
  TrainingConfig cfg;
  cfg.method = o.method;
  cfg.r = o.r;
  cfg.m = o.method == Method::pod ? 0 : o.m;
  cfg.lambda = o.method == Method::pod ? 0.0 : o.lambda;
  if (o.offset == "mean") cfg.offset = OffsetChoice::mean();
  else if (o.offset == "zero") cfg.offset = OffsetChoice::zero();
  else throw Error(ErrorKind::InvalidConfig, "offset must be 'mean' or 'zero', got '" + o.offset + "'");
  if (o.method == Method::kernel) cfg.kernel = kernel_from_options(o);
  cfg.normalize_inputs = o.normalize;
  cfg.validate();
  return cfg;
}

RunManifest cmd_train(const fs::path& dataset, const TrainOptions& opts, const fs::path& out_dir) {
  const TrainingConfig cfg = training_config(opts);
  const SnapshotSet train_set = load_split(dataset, "train");
  const std::string hash = dataset_hash(dataset);
  const auto fitted = timed([&] { return train(train_set, cfg); });

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());
  io::save_manifold(out_dir, fitted.value, {{"training", to_json(opts)}, {"dataset_hash", hash}});

  RunManifest run;
  run.command = "train";
  run.config = to_json(opts);
  run.config["dataset"] = dataset.string();
  run.dataset_hash = hash;
  run.r = fitted.value.r();
  run.m = fitted.value.m();
  if (const auto* kc = std::get_if<KernelCorrection>(&fitted.value.correction)) {
    run.kernel = to_json(kc->kernel);
  }
  run.lambda = fitted.value.lambda;
  run.wall_times["train_s"] = fitted.seconds;
  run.timestamp = utc_timestamp();
  io::write_json(out_dir / "run.json", to_json(run));
  return run;
}

// --- CSV ----------------------------------------------------------------------------------

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"method", "r",      "m",     "kernel",
                                             "epsilon", "lambda", "metric", "value",
                                             "train_time_s", "source", "error"};
  return cols;
}

std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> fields_of(const ResultRow& row) {
  return {row.method, row.r,     row.m,     row.kernel,       row.epsilon, row.lambda,
          row.metric, row.value, row.train_time_s, row.source, row.error};
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << quote(fields[i]);
  out << '\n';
}

// RFC 4180 records; quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const fs::path& path) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorKind::SchemaError, "unterminated quote in '" + path.string() + "'");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

void write_rows(const fs::path& csv, const std::vector<ResultRow>& rows) {
  std::ofstream out(csv, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + csv.string() + "' for writing");
  write_line(out, csv_columns());
  for (const auto& row : rows) write_line(out, fields_of(row));
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + csv.string() + "'");
}

void append_rows(const fs::path& csv, const std::vector<ResultRow>& rows) {
  const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
  std::ofstream out(csv, std::ios::app);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + csv.string() + "' for appending");
  if (fresh) write_line(out, csv_columns());
  for (const auto& row : rows) write_line(out, fields_of(row));
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + csv.string() + "'");
}

std::vector<ResultRow> read_rows(const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + csv.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto records = parse_csv(buffer.str(), csv);
  if (records.empty()) throw Error(ErrorKind::SchemaError, "'" + csv.string() + "' is empty");

  // Columns are matched by name; train_time_s, source and error may be absent in
  // externally produced files.
  const auto& header = records.front();
  std::vector<int> slot(header.size(), -1);
  const auto& cols = csv_columns();
  std::vector<bool> seen(cols.size(), false);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto it = std::find(cols.begin(), cols.end(), header[i]);
    if (it == cols.end()) {
      throw Error(ErrorKind::SchemaError, "unknown column '" + header[i] + "' in '" + csv.string() + "'");
    }
    slot[i] = static_cast<int>(it - cols.begin());
    seen[static_cast<std::size_t>(slot[i])] = true;
  }
  for (std::size_t k = 0; k < 8; ++k) {
    if (!seen[k]) throw Error(ErrorKind::SchemaError, "missing column '" + cols[k] + "' in '" + csv.string() + "'");
  }
  if (records.size() < 2) throw Error(ErrorKind::SchemaError, "'" + csv.string() + "' has no data rows");

  std::vector<ResultRow> rows;
  for (std::size_t line = 1; line < records.size(); ++line) {
    const auto& rec = records[line];
    if (rec.size() != header.size()) {
      throw Error(ErrorKind::SchemaError, "row " + std::to_string(line) + " of '" + csv.string() +
                                              "' has " + std::to_string(rec.size()) + " fields, expected " +
                                              std::to_string(header.size()));
    }
    std::vector<std::string> f(cols.size());
    f[9] = "kman";
    for (std::size_t i = 0; i < rec.size(); ++i) f[static_cast<std::size_t>(slot[i])] = rec[i];
    rows.push_back(ResultRow{f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9], f[10]});
  }
  return rows;
}

// --- evaluate -----------------------------------------------------------------------------

EvaluateResult cmd_evaluate(const fs::path& manifold_dir, const fs::path& dataset,
                            std::optional<MetricKind> requested, const fs::path& csv,
                            const std::string& split) {
  const TrainedManifold manifold = io::load_manifold(manifold_dir);
  const SnapshotSet truth = load_split(dataset, split);
  const MetricKind metric = requested ? *requested : default_metric(dataset);
  EvaluateResult out;
  out.report = evaluate(metric, truth, manifold);

  std::optional<TrainOptions> opts;
  std::string train_time;
  if (fs::exists(manifold_dir / "run.json")) {
    const auto run = run_manifest_from_json(io::read_json(manifold_dir / "run.json"));
    opts = train_options_from_json(run.config);
    if (auto it = run.wall_times.find("train_s"); it != run.wall_times.end()) {
      train_time = format_real(it->second);
    }
  } else if (const auto manifest = io::read_json(manifold_dir / "manifest.json"); manifest.contains("training")) {
    opts = train_options_from_json(manifest["training"]);
  }

  ResultRow& row = out.row;
  row.method = std::string(to_string(manifold.method()));
  row.r = std::to_string(manifold.r());
  row.m = std::to_string(manifold.m());
  if (manifold.method() == Method::kernel) {
    row.kernel = opts ? opts->kernel : kernel_name(std::get<KernelCorrection>(manifold.correction).kernel);
    if (opts && uses_epsilon(*opts)) row.epsilon = format_real(opts->epsilon);
  }
  if (manifold.method() != Method::pod) row.lambda = format_real(manifold.lambda);
  row.metric = std::string(to_string(metric));
  row.value = format_real(out.report.value);
  row.train_time_s = train_time;
  if (!csv.empty()) append_rows(csv, {row});
  return out;
}

}  // namespace kman::cli
