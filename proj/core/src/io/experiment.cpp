#include "rootflow/io/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <set>

#include "rootflow/error.hpp"
#include "rootflow/io/csv.hpp"
#include "rootflow/scm/synth.hpp"

namespace rootflow::io {
namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config field '") + key + "': " + e.what());
  }
}

template <typename T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read_field(j, key, v);
  out = v;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json graph_json(const scm::Dag& dag) {
  json rows = json::array();
  for (std::size_t i = 0; i < dag.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < dag.size(); ++j) row.push_back(dag.has_edge(i, j) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Runs the method on one prepared dataset, filling order and diagnostics.
void run_method(const ExperimentConfig& cfg, const scm::Dataset& raw, num::RngStream& rng,
                SeedRecord& rec) {
  switch (cfg.method) {
    case Method::varsort:
      rec.order = eval::CausalOrder(scm::varsort_order(raw));
      return;
    case Method::sequential: {
      const auto result = order::discover_order(scm::standardize(raw), cfg.sequential_config(), rng);
      rec.order = eval::CausalOrder(result.order);
      rec.rounds = result.rounds;
      return;
    }
    case Method::permutation: {
      auto result = perm::discover_order_perm(scm::standardize(raw), cfg.perm_config(), rng);
      rec.order = std::move(result.order);
      rec.soft_permutation = std::move(result.soft_permutation);
      rec.epoch_losses = std::move(result.epoch_losses);
      return;
    }
  }
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::sequential: return "sequential";
    case Method::permutation: return "permutation";
    case Method::varsort: return "varsort";
  }
  return "sequential";
}

Method parse_method(std::string_view text) {
  if (text == "sequential") return Method::sequential;
  if (text == "permutation") return Method::permutation;
  if (text == "varsort") return Method::varsort;
  throw ArgumentError("unknown method '" + std::string(text) +
                      "' (expected sequential, permutation or varsort)");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ArgumentError("seeds: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ArgumentError("seeds: duplicate seed");
  if (graph && !data) throw ArgumentError("graph: only meaningful together with data");
  if (!data) {
    if (d < 2) throw ArgumentError("d: must be >= 2");
    if (n < 2) throw ArgumentError("n: must be >= 2");
    if (edge_prob && !(*edge_prob >= 0.0 && *edge_prob <= 1.0))
      throw ArgumentError("edge_prob: must lie in [0, 1]");
  }
  if (method == Method::varsort) return;
  if (flow_layers < 1 || flow_layers > 3) throw ArgumentError("flow_layers: must be 1..3");
  if (mlp_hidden_layers < 1 || mlp_hidden_layers > 3)
    throw ArgumentError("mlp_hidden_layers: must be 1..3");
  try {
    if (method == Method::sequential)
      sequential_config().validate();
    else
      perm_config().validate();
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string("invalid ") + std::string(to_string(method)) +
                        " settings: " + e.what());
  }
}

flow::TrainConfig ExperimentConfig::train_config() const {
  flow::TrainConfig tc;
  tc.lr = lr;
  tc.batch_size = batch_size;
  tc.epochs = epochs;
  tc.n_layers = flow_layers;
  tc.hidden_layers = mlp_hidden_layers;
  tc.hidden_units = hidden_units;
  tc.dropout = dropout;
  tc.spline.bins = spline_bins;
  tc.spline.bound = spline_bound;
  return tc;
}

order::SequentialConfig ExperimentConfig::sequential_config() const {
  order::SequentialConfig sc;
  sc.train = train_config();
  sc.aggregation = jac_agg;
  sc.jacobian_step = jacobian_step;
  sc.threads = threads;
  return sc;
}

perm::PermConfig ExperimentConfig::perm_config() const {
  perm::PermConfig pc;
  pc.train = train_config();
  pc.t = t;
  pc.lambda = lambda;
  pc.sinkhorn_iters = sinkhorn_iters;
  pc.gumbel = gumbel;
  pc.jacobian_step = jacobian_step;
  return pc;
}

json to_json(const ExperimentConfig& c) {
  return json{{"method", to_string(c.method)},
              {"d", c.d},
              {"n", c.n},
              {"seeds", c.seeds},
              {"edge_prob", optional_json(c.edge_prob)},
              {"epochs", c.epochs},
              {"lr", c.lr},
              {"batch_size", c.batch_size},
              {"flow_layers", c.flow_layers},
              {"mlp_hidden_layers", c.mlp_hidden_layers},
              {"hidden_units", c.hidden_units},
              {"dropout", c.dropout},
              {"spline_bins", c.spline_bins},
              {"spline_bound", c.spline_bound},
              {"jac_agg", order::to_string(c.jac_agg)},
              {"jacobian_step", c.jacobian_step},
              {"t", c.t},
              {"lambda", c.lambda},
              {"sinkhorn_iters", c.sinkhorn_iters},
              {"gumbel", c.gumbel},
              {"data", optional_json(c.data)},
              {"graph", optional_json(c.graph)},
              {"shuffle", c.shuffle},
              {"threads", c.threads},
              {"output", optional_json(c.output)}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  static const std::set<std::string> known = {
      "method", "d", "n", "seeds", "seed", "edge_prob", "epochs", "lr", "batch_size",
      "flow_layers", "mlp_hidden_layers", "hidden_units", "dropout", "spline_bins",
      "spline_bound", "jac_agg", "jacobian_step", "t", "lambda", "sinkhorn_iters", "gumbel",
      "data", "graph", "shuffle", "threads", "output"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ArgumentError("unknown config field '" + key + "'");

  ExperimentConfig c;
  if (j.contains("method")) {
    std::string m;
    read_field(j, "method", m);
    c.method = parse_method(m);
  }
  read_field(j, "d", c.d);
  read_field(j, "n", c.n);
  if (j.contains("seeds") && j.contains("seed"))
    throw ArgumentError("config sets both 'seed' and 'seeds'");
  read_field(j, "seeds", c.seeds);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read_field(j, "seed", s);
    c.seeds = {s};
  }
  read_optional(j, "edge_prob", c.edge_prob);
  read_field(j, "epochs", c.epochs);
  read_field(j, "lr", c.lr);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "flow_layers", c.flow_layers);
  read_field(j, "mlp_hidden_layers", c.mlp_hidden_layers);
  read_field(j, "hidden_units", c.hidden_units);
  read_field(j, "dropout", c.dropout);
  read_field(j, "spline_bins", c.spline_bins);
  read_field(j, "spline_bound", c.spline_bound);
  if (j.contains("jac_agg")) {
    std::string a;
    read_field(j, "jac_agg", a);
    c.jac_agg = order::parse_jac_aggregation(a);
  }
  read_field(j, "jacobian_step", c.jacobian_step);
  read_field(j, "t", c.t);
  read_field(j, "lambda", c.lambda);
  read_field(j, "sinkhorn_iters", c.sinkhorn_iters);
  read_field(j, "gumbel", c.gumbel);
  read_optional(j, "data", c.data);
  read_optional(j, "graph", c.graph);
  read_field(j, "shuffle", c.shuffle);
  read_field(j, "threads", c.threads);
  read_optional(j, "output", c.output);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(0, 0, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

Shuffled shuffle_columns(const scm::Dataset& ds, const scm::Dag& dag, num::RngStream& rng) {
  if (ds.d() != dag.size())
    throw DimensionError("shuffle_columns: dataset has " + std::to_string(ds.d()) +
                         " columns, graph has " + std::to_string(dag.size()) + " nodes");
  Shuffled out;
  out.perm = rng.permutation(ds.d());
  out.data = ds.select_columns(out.perm);
  std::vector<std::size_t> new_label(ds.d());
  for (std::size_t k = 0; k < ds.d(); ++k) new_label[out.perm[k]] = k;
  out.dag = dag.relabeled(new_label);
  return out;
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  rec.config = cfg;

  std::optional<scm::Dataset> file_data;
  std::optional<scm::Dag> file_graph;
  if (cfg.data) {
    file_data = load_dataset_csv(*cfg.data);
    if (cfg.graph) file_graph = load_graph_csv(*cfg.graph, file_data->column_names);
    rec.config.d = file_data->d();
    rec.config.n = file_data->n();
  }

  auto seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  for (const auto seed : seeds) {
    const auto seed_start = std::chrono::steady_clock::now();
    SeedRecord sr;
    sr.seed = seed;
    try {
      scm::Dataset raw;
      std::optional<scm::Dag> dag;
      if (file_data) {
        raw = *file_data;
        dag = file_graph;
      } else {
        scm::SynthConfig sc;
        sc.d = cfg.d;
        sc.n = cfg.n;
        sc.edge_prob = cfg.edge_prob;
        sc.seed = seed;
        auto syn = scm::synthesize(sc);
        raw = std::move(syn.data);
        dag = std::move(syn.scm.dag);
      }
      const num::RngStream root(seed);
      if (cfg.shuffle) {
        auto shuffle_rng = root.derive(kShuffleStream);
        auto sh = shuffle_columns(raw, dag.value_or(scm::Dag(raw.d())), shuffle_rng);
        raw = std::move(sh.data);
        if (dag) dag = std::move(sh.dag);
      }
      sr.column_names = raw.column_names;
      sr.graph = dag;
      auto method_rng = root.derive(kMethodStream);
      run_method(cfg, raw, method_rng, sr);
      if (dag) sr.count_backward = eval::count_backward(*sr.order, *dag);
    } catch (const std::exception& e) {
      sr.error = e.what();
    }
    sr.seconds = seconds_since(seed_start);
    rec.seeds.push_back(std::move(sr));
  }

  const bool all_failed = std::all_of(rec.seeds.begin(), rec.seeds.end(),
                                      [](const SeedRecord& s) { return s.error.has_value(); });
  if (all_failed) throw Error("every seed failed; first error: " + *rec.seeds.front().error);
  for (const auto& s : rec.seeds)
    if (s.count_backward) rec.cb_values.push_back(static_cast<double>(*s.count_backward));
  if (rec.cb_values.size() >= 2) {
    const auto stats = eval::aggregate(rec.cb_values);
    rec.cb_mean = stats.mean;
    rec.cb_std = stats.std;
  } else if (rec.cb_values.size() == 1) {
    rec.cb_mean = rec.cb_values.front();
  }
  rec.wall_seconds = seconds_since(start);
  return rec;
}

json to_json(const num::Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

json to_json(const order::Round& round) {
  json scores = json::array();
  for (const auto& s : round.scores)
    scores.push_back(
        json{{"variable", s.variable + 1}, {"max_jac", s.max_jac}, {"jac_row", s.jac_row}});
  std::vector<std::size_t> remaining;
  for (auto v : round.remaining) remaining.push_back(v + 1);
  return json{{"remaining", remaining}, {"chosen", round.chosen + 1}, {"scores", scores}};
}

json to_json(const ResultRecord& rec, bool include_timing) {
  json seeds = json::array();
  json seed_seconds = json::array();
  for (const auto& s : rec.seeds) {
    json js{{"seed", s.seed},
            {"error", optional_json(s.error)},
            {"column_names", s.column_names},
            {"graph", s.graph ? graph_json(*s.graph) : json(nullptr)},
            {"order", s.order ? json(s.order->to_one_based_string()) : json(nullptr)},
            {"count_backward", optional_json(s.count_backward)}};
    if (rec.config.method == Method::sequential) {
      json rounds = json::array();
      for (const auto& r : s.rounds) rounds.push_back(to_json(r));
      js["rounds"] = std::move(rounds);
    }
    if (rec.config.method == Method::permutation) {
      js["soft_permutation"] = s.soft_permutation ? to_json(*s.soft_permutation) : json(nullptr);
      js["epoch_losses"] = s.epoch_losses;
    }
    seeds.push_back(std::move(js));
    seed_seconds.push_back(json{{"seed", s.seed}, {"seconds", s.seconds}});
  }
  // The worker count only affects speed, so it is reported with the timing.
  json config = to_json(rec.config);
  config.erase("threads");
  json out{{"config", std::move(config)},
           {"seeds", std::move(seeds)},
           {"aggregate",
            json{{"count_backward", rec.cb_values},
                 {"mean", optional_json(rec.cb_mean)},
                 {"std", optional_json(rec.cb_std)}}}};
  if (include_timing)
    out["timing"] = json{{"wall_seconds", rec.wall_seconds},
                         {"threads", rec.config.threads},
                         {"per_seed", std::move(seed_seconds)}};
  return out;
}

std::string dump_result(const ResultRecord& rec, bool include_timing) {
  return to_json(rec, include_timing).dump(2) + "\n";
}

}  // namespace rootflow::io
