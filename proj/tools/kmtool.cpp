// kmtool: generate | train | evaluate | sweep | report
//
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure, 4 I/O.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "kman/cli.hpp"
#include "kman/errors.hpp"
#include "kman/io.hpp"

namespace fs = std::filesystem;
using namespace kman;

namespace {

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-manifold dimensionality reduction toolkit"};
  app.set_version_flag("--version", std::string(cli::kToolVersion));
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a dataset directory from a JSON config");
  std::string problem;
  fs::path gen_config, gen_out;
  gen->add_option("problem", problem, "surface_heating or advdiff")->required();
  gen->add_option("config", gen_config, "config JSON or an existing dataset manifest")->required();
  gen->add_option("-o,--out", gen_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a manifold on a dataset's training split");
  fs::path tr_dataset, tr_out, tr_from;
  cli::TrainOptions opts;
  std::string method = "kernel";
  double rho = 0.0;
  tr->add_option("dataset", tr_dataset, "dataset directory or snapshot file")->required();
  tr->add_option("-o,--out", tr_out, "manifold directory")->required();
  tr->add_option("--from", tr_from, "reuse options from a run.json or options JSON");
  tr->add_option("--method", method, "pod | fm-qm | kernel");
  tr->add_option("--r", opts.r, "latent dimension");
  tr->add_option("--m", opts.m, "correction dimension");
  tr->add_option("--kernel", opts.kernel, "RBF name, polynomial or quadratic");
  tr->add_option("--eps", opts.epsilon, "RBF shape parameter");
  tr->add_option("--lambda", opts.lambda, "regularization");
  tr->add_flag("--normalize", opts.normalize, "min/range-normalize latent inputs");
  tr->add_option("--poly-c", opts.poly_c, "polynomial offset c");
  auto* rho_opt = tr->add_option("--poly-rho", rho, "polynomial scale (default 1/r)");
  tr->add_option("--poly-ell", opts.poly_ell, "polynomial degree");
  tr->add_option("--fm-weight", opts.fm_weight, "identity | scaled_identity");
  tr->add_option("--offset", opts.offset, "mean | zero");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a saved manifold and append a CSV row");
  fs::path ev_manifold, ev_dataset, ev_csv;
  std::string metric, split = "test";
  ev->add_option("manifold", ev_manifold)->required();
  ev->add_option("dataset", ev_dataset)->required();
  ev->add_option("--metric", metric,
                 "rel_l2_trajectory | mean_rel_l2 | rel_l1_max (default depends on the dataset)");
  ev->add_option("--split", split, "train | test");
  ev->add_option("--csv", ev_csv, "results CSV to append to");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run a hyperparameter sweep");
  fs::path sw_dataset, sw_spec, sw_csv, sw_summary;
  sw->add_option("dataset", sw_dataset)->required();
  sw->add_option("spec", sw_spec, "sweep spec JSON")->required();
  sw->add_option("--csv", sw_csv, "results CSV (overwritten)")->required();
  sw->add_option("--summary", sw_summary, "summary JSON (default: <csv>.summary.json)");

  // report
  auto* rep = app.add_subcommand("report", "Render plots and a markdown table from a results CSV");
  fs::path rep_csv, rep_out, rep_manifold;
  rep->add_option("csv", rep_csv)->required();
  rep->add_option("-o,--out", rep_out, "output directory")->required();
  rep->add_option("--manifold", rep_manifold, "manifold directory for the singular-value plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      print_json(cli::cmd_generate(problem, gen_config, gen_out));
    } else if (tr->parsed()) {
      if (!tr_from.empty()) {
        opts = cli::train_options_from_json(io::read_json(tr_from));
      } else {
        opts.method = parse_method(method);
        if (rho_opt->count() > 0) opts.poly_rho = rho;
      }
      print_json(cli::to_json(cli::cmd_train(tr_dataset, opts, tr_out)));
    } else if (ev->parsed()) {
      std::optional<MetricKind> kind;
      if (!metric.empty()) kind = parse_metric(metric);
      const auto result = cli::cmd_evaluate(ev_manifold, ev_dataset, kind, ev_csv, split);
      std::cout << to_string(result.report.kind) << " = " << cli::format_real(result.report.value) << '\n';
    } else if (sw->parsed()) {
      const auto spec = cli::sweep_spec_from_json(io::read_json(sw_spec));
      std::cerr << "sweep: " << spec.product_size() << " configurations\n";
      const auto data = cli::load_dataset(sw_dataset);
      if (sw_summary.empty()) sw_summary = sw_csv.string() + ".summary.json";
      const auto result = cli::run_sweep(data, spec, sw_csv, sw_summary);
      print_json(result.summary);
    } else if (rep->parsed()) {
      std::optional<fs::path> manifold;
      if (!rep_manifold.empty()) manifold = rep_manifold;
      for (const auto& f : cli::cmd_report(rep_csv, rep_out, manifold).files) std::cout << f.string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
