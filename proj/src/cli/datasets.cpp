#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <ctime>

#include "internal.hpp"
#include "kman/io.hpp"
#include "kman/problems.hpp"

namespace kman::cli {

namespace detail {

std::vector<double> real_axis(const json& j, const std::string& what) {
  auto bad = [&](const std::string& why) -> std::vector<double> {
    throw Error(ErrorKind::InvalidConfig, what + ": " + why);
  };
  try {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
      auto v = j.get<std::vector<double>>();
      if (v.empty()) return bad("axis is empty");
      return v;
    }
    if (j.is_object() && j.size() == 1) {
      const auto it = j.begin();
      const std::string kind = it.key();
      const json& args = it.value();
      if (kind != "logspace" && kind != "linspace") return bad("unknown axis generator '" + kind + "'");
      if (!args.is_array() || args.size() != 3) return bad(kind + " takes [lo, hi, n]");
      const double lo = args[0].get<double>(), hi = args[1].get<double>();
      const auto n = args[2].get<long long>();
      if (n < 1) return bad(kind + " needs n >= 1");
      if (kind == "logspace") {
        if (!(lo > 0.0 && hi > 0.0)) return bad("logspace bounds must be positive");
        return logspace(lo, hi, static_cast<std::size_t>(n));
      }
      return linspace(lo, hi, static_cast<std::size_t>(n));
    }
  } catch (const json::exception& e) {
    return bad(e.what());
  }
  return bad("expected a number, a list, or {\"logspace\": [lo, hi, n]}");
}

}  // namespace detail

using detail::FieldReader;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const RunManifest& run) {
  return json{{"command", run.command},
              {"config", run.config},
              {"dataset_hash", run.dataset_hash},
              {"dims", {{"r", run.r}, {"m", run.m}}},
              {"kernel", run.kernel},
              {"lambda", run.lambda},
              {"metrics", run.metrics},
              {"wall_times", run.wall_times},
              {"tool_version", run.tool_version},
              {"timestamp", run.timestamp}};
}

RunManifest run_manifest_from_json(const json& j) {
  try {
    RunManifest run;
    run.command = j.at("command").get<std::string>();
    run.config = j.at("config");
    run.dataset_hash = j.at("dataset_hash").get<std::string>();
    run.r = j.at("dims").at("r").get<Eigen::Index>();
    run.m = j.at("dims").at("m").get<Eigen::Index>();
    run.kernel = j.at("kernel");
    run.lambda = j.at("lambda").get<double>();
    run.metrics = j.at("metrics").get<std::map<std::string, double>>();
    run.wall_times = j.at("wall_times").get<std::map<std::string, double>>();
    run.tool_version = j.at("tool_version").get<std::string>();
    run.timestamp = j.at("timestamp").get<std::string>();
    return run;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("bad run manifest: ") + e.what());
  }
}

namespace {

const fs::path kManifest = "manifest.json";

bool is_dataset_dir(const fs::path& path) { return fs::is_directory(path); }

json read_dataset_manifest(const fs::path& dir) {
  const auto manifest = io::read_json(dir / kManifest);
  if (manifest.value("format", "") != "kman-dataset") {
    throw Error(ErrorKind::SchemaError, "'" + dir.string() + "' is not a dataset directory");
  }
  return manifest;
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  return {dir / "train.bin", io::sidecar_path(dir / "train.bin"), dir / "test.bin",
          io::sidecar_path(dir / "test.bin")};
}

json resolve_surface(const json& config) {
  FieldReader in(config, "surface_heating config");
  in.ignore("problem");
  SurfaceHeatingGrid g;
  g.nz = in.get("nz", g.nz);
  g.ntheta = in.get("ntheta", g.ntheta);
  g.n_mu1 = in.get("n_mu1", g.n_mu1);
  g.n_mu2 = in.get("n_mu2", g.n_mu2);
  g.mu1_range_deg = in.get("mu1_range_deg", g.mu1_range_deg);
  g.mu2_range = in.get("mu2_range", g.mu2_range);
  g.delta = in.get("delta", g.delta);
  in.finish();
  try {
    g.validate();
  } catch (const Error& e) {
    in.fail("", e.what());
  }
  return json{{"problem", "surface_heating"}, {"nz", g.nz},       {"ntheta", g.ntheta},
              {"n_mu1", g.n_mu1},             {"n_mu2", g.n_mu2}, {"mu1_range_deg", g.mu1_range_deg},
              {"mu2_range", g.mu2_range},     {"delta", g.delta}};
}

json resolve_advdiff(const json& config) {
  FieldReader in(config, "advdiff config");
  in.ignore("problem");
  AdvDiffConfig c;
  c.n_per_axis = in.get("n_per_axis", c.n_per_axis);
  c.beta = in.get("beta", c.beta);
  c.gamma = in.get("gamma", c.gamma);
  c.forcing = in.get("forcing", c.forcing);
  c.t_final = in.get("t_final", c.t_final);
  c.dt = in.get("dt", c.dt);
  std::vector<double> alphas = logspace(1e-6, 1e-1, 4);
  std::vector<double> test_alphas{1e-3};
  if (in.has("alphas")) alphas = detail::real_axis(in.raw("alphas"), "advdiff config field 'alphas'");
  else in.ignore("alphas");
  if (in.has("test_alphas")) {
    test_alphas = detail::real_axis(in.raw("test_alphas"), "advdiff config field 'test_alphas'");
  } else {
    in.ignore("test_alphas");
  }
  in.finish();
  for (double a : alphas) {
    if (!(a > 0.0)) in.fail("alphas", "every alpha must be > 0");
  }
  for (double a : test_alphas) {
    if (!(a > 0.0)) in.fail("test_alphas", "every alpha must be > 0");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    in.fail("", e.what());
  }
  return json{{"problem", "advdiff"}, {"n_per_axis", c.n_per_axis}, {"alphas", alphas},
              {"test_alphas", test_alphas}, {"beta", c.beta}, {"gamma", c.gamma},
              {"forcing", c.forcing}, {"t_final", c.t_final}, {"dt", c.dt}};
}

/// sigma_j / sigma_1 of the raw training matrix for a few j.
json sigma_ratios(const Matrix& states) {
  Eigen::BDCSVD<Matrix> svd(states);
  const Vector& s = svd.singularValues();
  json out = json::object();
  if (s.size() == 0 || s(0) == 0.0) return out;
  for (Eigen::Index j : {2, 5, 10, 20, 50, 100}) {
    if (j <= s.size()) out["sigma_" + std::to_string(j) + "/sigma_1"] = s(j - 1) / s(0);
  }
  return out;
}

}  // namespace

json resolve_dataset_config(const std::string& problem, const json& config) {
  if (config.is_object() && config.contains("problem") && config["problem"] != problem) {
    throw Error(ErrorKind::InvalidConfig, "config is for problem " + config["problem"].dump() +
                                              ", not '" + problem + "'");
  }
  if (problem == "surface_heating") return resolve_surface(config);
  if (problem == "advdiff") return resolve_advdiff(config);
  throw Error(ErrorKind::InvalidConfig,
              "unknown problem '" + problem + "' (expected surface_heating or advdiff)");
}

json generate_dataset(const std::string& problem, const json& config, const fs::path& out_dir) {
  const json resolved = resolve_dataset_config(problem, config);
  SnapshotSet train, test;
  json orderings;
  std::optional<double> scale;
  if (problem == "surface_heating") {
    SurfaceHeatingGrid g;
    g.nz = resolved["nz"];
    g.ntheta = resolved["ntheta"];
    g.n_mu1 = resolved["n_mu1"];
    g.n_mu2 = resolved["n_mu2"];
    g.mu1_range_deg = resolved["mu1_range_deg"];
    g.mu2_range = resolved["mu2_range"];
    g.delta = resolved["delta"];
    auto data = surface_heating_dataset(g);
    train = std::move(data.train);
    test = std::move(data.test);
    scale = data.scale;
    orderings = {{"flatten", "iz + nz * itheta (z fastest), endpoint-inclusive grids"},
                 {"columns", "mu2 fastest, mu1 slower; even columns train, odd columns test"}};
  } else {
    AdvDiffConfig base;
    base.n_per_axis = resolved["n_per_axis"];
    base.beta = resolved["beta"];
    base.gamma = resolved["gamma"];
    base.forcing = resolved["forcing"];
    base.t_final = resolved["t_final"];
    base.dt = resolved["dt"];
    train = advdiff_dataset(resolved["alphas"].get<std::vector<double>>(), base);
    test = advdiff_dataset(resolved["test_alphas"].get<std::vector<double>>(), base);
    orderings = {{"flatten", "ix + n * iy (x fastest), interior nodes, h = 1/(n+1)"},
                 {"columns", "alpha-major in listed order, time index fastest, t = 0 included"}};
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());
  io::write_snapshots(out_dir / "train.bin", train);
  io::write_snapshots(out_dir / "test.bin", test);

  json manifest{{"format", "kman-dataset"},
                {"version", 1},
                {"problem", problem},
                {"config", resolved},
                {"orderings", orderings},
                {"N", train.dim()},
                {"M_train", train.count()},
                {"M_test", test.count()},
                {"sha256", io::sha256_files(dataset_files(out_dir))},
                {"sigma_ratios", sigma_ratios(train.states)},
                {"scale", scale ? json(*scale) : json(nullptr)},
                {"tool_version", kToolVersion},
                {"timestamp", utc_timestamp()}};
  io::write_json(out_dir / kManifest, manifest);
  return manifest;
}

json cmd_generate(const std::string& problem, const fs::path& config_path, const fs::path& out_dir) {
  json config = io::read_json(config_path);
  // An existing dataset manifest regenerates the same dataset.
  if (config.is_object() && config.value("format", "") == "kman-dataset") {
    if (config.value("problem", problem) != problem) {
      throw Error(ErrorKind::InvalidConfig, "manifest is for problem " + config["problem"].dump());
    }
    config = config.at("config");
  }
  return generate_dataset(problem, config, out_dir);
}

Dataset load_dataset(const fs::path& path) {
  Dataset d;
  if (is_dataset_dir(path)) {
    d.manifest = read_dataset_manifest(path);
    d.hash = io::sha256_files(dataset_files(path));
    if (d.hash != d.manifest.value("sha256", "")) {
      throw Error(ErrorKind::SchemaError, "dataset '" + path.string() + "' does not match its recorded hash");
    }
    d.train = io::read_snapshots(path / "train.bin");
    d.test = io::read_snapshots(path / "test.bin");
  } else {
    // A bare snapshot file serves as both splits.
    d.train = io::read_snapshots(path);
    d.test = d.train;
    d.hash = io::sha256_file(path);
    d.manifest = json{{"format", "snapshot-file"}, {"path", path.string()}};
  }
  return d;
}

SnapshotSet load_split(const fs::path& path, const std::string& split) {
  if (split != "train" && split != "test") {
    throw Error(ErrorKind::InvalidConfig, "split must be 'train' or 'test', got '" + split + "'");
  }
  if (is_dataset_dir(path)) {
    read_dataset_manifest(path);
    return io::read_snapshots(path / (split + ".bin"));
  }
  return io::read_snapshots(path);
}

MetricKind default_metric(const json& dataset_manifest) {
  return dataset_manifest.value("problem", "") == "advdiff" ? MetricKind::rel_l2_trajectory
                                                             : MetricKind::mean_rel_l2;
}

MetricKind default_metric(const fs::path& dataset) {
  if (!is_dataset_dir(dataset)) return MetricKind::mean_rel_l2;
  return default_metric(read_dataset_manifest(dataset));
}

std::string dataset_hash(const fs::path& path) {
  if (is_dataset_dir(path)) return read_dataset_manifest(path).value("sha256", "");
  return io::sha256_file(path);
}

}  // namespace kman::cli
