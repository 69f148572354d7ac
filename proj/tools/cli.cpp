#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "rootflow/error.hpp"
#include "rootflow/eval/metrics.hpp"
#include "rootflow/io/csv.hpp"
#include "rootflow/io/experiment.hpp"
#include "rootflow/scm/synth.hpp"

namespace rootflow::cli {
namespace fs = std::filesystem;
namespace {

constexpr const char* kOutputEnv = "ROOTFLOW_OUTPUT_DIR";

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputEnv);
  return (env && *env) ? fs::path(env) : fs::current_path();
}

struct Options {
  io::ExperimentConfig cfg;
  std::uint64_t seed = 0;
  std::string jac_agg = "max";
  std::string out_dir;
  std::string data;
  std::string graph;
  std::string order;
  std::string order_file;
  std::string config;
  std::string out;
  bool no_gumbel = false;
};

void add_seed(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

void add_output_dir(CLI::App* app, Options& o) {
  app->add_option("--out-dir", o.out_dir,
                  std::string("Output directory (default: $") + kOutputEnv + " or the working directory)");
}

void add_training(CLI::App* app, Options& o) {
  auto& c = o.cfg;
  app->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app->add_option("--lr", c.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--batch-size", c.batch_size, "Minibatch size")->capture_default_str();
  app->add_option("--flow-layers", c.flow_layers, "Spline flow layers (1-3)")->capture_default_str();
  app->add_option("--mlp-hidden-layers", c.mlp_hidden_layers, "Conditioner hidden layers (1-3)")
      ->capture_default_str();
  app->add_option("--hidden-units", c.hidden_units, "Conditioner hidden width")->capture_default_str();
  app->add_option("--dropout", c.dropout, "Conditioner dropout rate")->capture_default_str();
  app->add_option("--jacobian-step", c.jacobian_step, "Finite-difference step for Jacobians")
      ->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0 = hardware)")->capture_default_str();
}

void add_data_input(CLI::App* app, Options& o, bool graph_required) {
  app->add_option("--data", o.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  auto* g = app->add_option("--graph", o.graph, "Ground-truth graph CSV")->check(CLI::ExistingFile);
  if (graph_required) g->required();
}

fs::path resolve_dir(const std::string& dir) { return dir.empty() ? default_output_dir() : fs::path(dir); }

// discover, discover-perm and varsort: one run on a CSV dataset.
void run_discovery(io::Method method, Options& o, std::ostream& out) {
  auto cfg = o.cfg;
  cfg.method = method;
  cfg.seeds = {o.seed};
  cfg.data = o.data;
  if (!o.graph.empty()) cfg.graph = o.graph;
  cfg.shuffle = false;
  cfg.jac_agg = order::parse_jac_aggregation(o.jac_agg);
  if (o.no_gumbel) cfg.gumbel = false;
  const auto dir = resolve_dir(o.out_dir);
  cfg.output = (dir / "result.json").string();
  auto rec = io::run_experiment(cfg);
  const auto& seed = rec.seeds.front();
  if (seed.error) throw Error(*seed.error);
  io::save_order_file(dir / "order.txt", *seed.order);
  io::write_text_file(*cfg.output, io::dump_result(rec));
  out << "order: " << seed.order->to_one_based_string() << '\n';
  if (seed.count_backward) out << "count_backward: " << *seed.count_backward << '\n';
  out << "wrote " << (dir / "order.txt").string() << " and " << *cfg.output << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Causal ordering by sequential root finding with conditional spline flows", "rootflow"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Sample a monotonic SCM; write data.csv and graph.csv");
  synth->add_option("--d", o.cfg.d, "Number of variables")->capture_default_str();
  synth->add_option("--n", o.cfg.n, "Number of samples")->capture_default_str();
  synth->add_option("--edge-prob", o.cfg.edge_prob, "Edge probability (default 2/(d-1))");
  add_seed(synth, o);
  add_output_dir(synth, o);

  auto* discover = app.add_subcommand("discover", "Sequential root finding; write order.txt and result.json");
  add_data_input(discover, o, false);
  add_seed(discover, o);
  add_training(discover, o);
  discover->add_option("--jac-agg", o.jac_agg, "Jacobian aggregation over samples")
      ->check(CLI::IsMember({"max", "mean", "p95"}))
      ->capture_default_str();
  add_output_dir(discover, o);

  auto* discover_perm =
      app.add_subcommand("discover-perm", "Permutation-learning baseline; write order.txt and result.json");
  add_data_input(discover_perm, o, false);
  add_seed(discover_perm, o);
  add_training(discover_perm, o);
  discover_perm->add_option("--t", o.cfg.t, "Sinkhorn temperature")->capture_default_str();
  discover_perm->add_option("--lambda", o.cfg.lambda, "Jacobian l1 penalty weight")->capture_default_str();
  discover_perm->add_option("--sinkhorn-iters", o.cfg.sinkhorn_iters, "Sinkhorn iterations per step")
      ->capture_default_str();
  discover_perm->add_flag("--no-gumbel", o.no_gumbel, "Disable Gumbel noise on the logits");
  add_output_dir(discover_perm, o);

  auto* varsort = app.add_subcommand("varsort", "Order by ascending marginal variance");
  add_data_input(varsort, o, false);
  add_output_dir(varsort, o);

  auto* evalc = app.add_subcommand("eval", "Print the number of backward edges of an order");
  auto* order_opt = evalc->add_option("--order", o.order, "Comma-separated 1-based order, e.g. 1,2,3");
  auto* order_file_opt =
      evalc->add_option("--order-file", o.order_file, "Order file")->check(CLI::ExistingFile);
  order_opt->excludes(order_file_opt);
  evalc->add_option("--graph", o.graph, "Ground-truth graph CSV")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("bench", "Run a seeded experiment from a JSON config");
  bench->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", o.out, "Result file (overrides the config's output)");
  auto* bench_threads = bench->add_option("--threads", o.cfg.threads, "Worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) {
      scm::SynthConfig sc;
      sc.d = o.cfg.d;
      sc.n = o.cfg.n;
      sc.edge_prob = o.cfg.edge_prob;
      sc.seed = o.seed;
      const auto syn = scm::synthesize(sc);
      const auto dir = resolve_dir(o.out_dir);
      io::save_dataset_csv(dir / "data.csv", syn.data);
      io::save_graph_csv(dir / "graph.csv", syn.scm.dag);
      out << "wrote " << (dir / "data.csv").string() << " and " << (dir / "graph.csv").string() << '\n';
    } else if (discover->parsed()) {
      run_discovery(io::Method::sequential, o, out);
    } else if (discover_perm->parsed()) {
      run_discovery(io::Method::permutation, o, out);
    } else if (varsort->parsed()) {
      run_discovery(io::Method::varsort, o, out);
    } else if (evalc->parsed()) {
      if (o.order.empty() && o.order_file.empty()) throw ArgumentError("eval needs --order or --order-file");
      const auto order = o.order.empty() ? io::load_order_file(o.order_file)
                                         : eval::CausalOrder::parse_one_based(o.order);
      const auto dag = io::load_graph_csv(o.graph);
      out << eval::count_backward(order, dag) << '\n';
    } else if (bench->parsed()) {
      auto cfg = io::load_config(o.config);
      if (!o.out.empty()) cfg.output = o.out;
      if (!cfg.output) cfg.output = (default_output_dir() / "result.json").string();
      if (bench_threads->count() > 0) cfg.threads = o.cfg.threads;
      const auto rec = io::run_experiment(cfg);
      io::write_text_file(*cfg.output, io::dump_result(rec));
      std::size_t failed = 0;
      for (const auto& s : rec.seeds) failed += s.error ? 1 : 0;
      out << io::to_string(cfg.method) << ": " << rec.seeds.size() << " seeds, " << failed << " failed";
      if (rec.cb_mean) out << ", mean count_backward " << *rec.cb_mean;
      if (rec.cb_std) out << " (std " << *rec.cb_std << ")";
      out << "\nwrote " << *cfg.output << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rootflow::cli
