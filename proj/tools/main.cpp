// Command-line front end: train | explain | eval | sweep | export-dot |
// gen-synthetic. Logs go to stderr; machine-readable output goes to files and
// stdout. Exit codes: 0 success, 1 usage, 2 validation, 3 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "simex/io.hpp"

namespace fs = std::filesystem;
using namespace simex;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

// Flag wins, then SIMEX_OUT_DIR, then the config's output_dir.
std::string resolve_out_dir(const std::string& flag_value,
                            const RunConfig& cfg) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SIMEX_OUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

Graph load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.edges.empty() || cfg.dataset.features.empty())
    throw ValidationError(
        "config must set dataset.edges and dataset.features for this command");
  std::cerr << "loading graph from " << cfg.dataset.edges << "\n";
  Graph g = load_graph(cfg.dataset.edges, cfg.dataset.features);
  std::cerr << "loaded " << g.node_count() << " nodes, " << g.edge_count()
            << " edges, " << g.feature_dim() << " features\n";
  return g;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
};

int run_train(const CommonArgs& common) {
  const RunConfig cfg = parse_config(common.config_path);
  const std::string out = resolve_out_dir(common.out_dir, cfg);
  ensure_dir(out);

  const Graph g = load_dataset(cfg);
  EncoderParams params;
  TrainReport best;
  std::vector<TrainReport> reports;

  if (cfg.grid.empty()) {
    std::cerr << "training " << trainer_name(cfg.train.trainer) << " for "
              << cfg.train.epochs << " epochs\n";
    auto [p, r] = train(g, cfg.train);
    params = std::move(p);
    best = std::move(r);
    reports.push_back(best);
  } else {
    std::cerr << "grid search over the configured hyperparameters\n";
    GridSearchResult res = grid_search(g, cfg.train, cfg.grid);
    params = std::move(res.params);
    best = std::move(res.report);
    reports = std::move(res.reports);
    std::cerr << "grid winner: lr=" << best.config.learning_rate
              << " hidden=" << best.config.hidden_dim
              << " embed=" << best.config.embed_dim
              << " kl=" << best.config.kl_weight << "\n";
  }

  const std::string ck = out + "/checkpoint.json";
  const std::string rp = out + "/train_report.json";
  save_checkpoint(ck, params, cfg);
  write_train_report(rp, best, reports, cfg);
  std::cerr << "final loss " << best.final_loss << " after "
            << best.loss_curve.size() << " epochs ("
            << fmt6(best.wall_time_sec) << " s)\n";
  std::cerr << "wrote " << ck << " and " << rp << "\n";
  return 0;
}

int run_explain(const CommonArgs& common, const std::string& checkpoint_path,
                std::vector<int> pair, std::string method_flag, int ig_steps,
                int top) {
  const RunConfig cfg = parse_config(common.config_path);
  const std::string out = resolve_out_dir(common.out_dir, cfg);
  ensure_dir(out);

  const NodeId i = pair.at(0), j = pair.at(1);
  const ExplainMethod method = method_flag.empty()
                                   ? cfg.explain.method
                                   : method_from_name(method_flag);
  const int steps = ig_steps > 0 ? ig_steps : cfg.explain.ig_steps;

  const Graph g = load_dataset(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.config_hash != config_hash(cfg))
    std::cerr << "note: checkpoint was produced by a different config ("
              << ck.config_hash << ")\n";

  ScoreModel model(g, ck.params);
  ExplanationMatrix m;
  switch (method) {
    case ExplainMethod::kGb1:
      m = explain_gb1(model, i, j);
      break;
    case ExplainMethod::kGb2:
      m = explain_gb2(model, i, j, steps);
      break;
    case ExplainMethod::kMi:
      m = explain_mi(model, i, j, cfg.mi);
      break;
  }

  const ExplanationDoc doc = make_explanation_doc(g, m, config_hash(cfg));
  const std::string path = out + "/explanation_" + m.method + "_" +
                           std::to_string(i) + "_" + std::to_string(j) +
                           ".json";
  save_explanation(path, doc);
  std::cerr << "wrote " << path << "\n";

  // Human-facing summary: the score and the strongest edges.
  std::cout << "score " << fmt6(m.score) << "\n";
  auto ranked = doc.edges;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return std::abs(std::get<2>(a)) > std::abs(std::get<2>(b));
  });
  if (static_cast<int>(ranked.size()) > top) ranked.resize(top);
  for (const auto& [u, v, value] : ranked)
    std::cout << u << " " << v << " " << fmt6(value) << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string method_flag;  // empty = all three
  int pairs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double sparsity = 0.0;
  int jobs = 0;
  bool soft_mask = false;
  bool records = false;
};

int run_eval(const CommonArgs& common, const EvalArgs& args) {
  const RunConfig cfg = parse_config(common.config_path);
  const std::string out = resolve_out_dir(common.out_dir, cfg);
  ensure_dir(out);

  const Graph g = load_dataset(cfg);
  const Checkpoint ck = load_checkpoint(args.checkpoint_path);
  ScoreModel model(g, ck.params);

  const int pair_count = args.pairs > 0 ? args.pairs : cfg.eval.pairs;
  const std::uint64_t seed =
      args.seed_set ? args.seed
                    : (cfg.eval.seeds.empty() ? 1 : cfg.eval.seeds.front());
  const auto pairs = sample_pairs(g, pair_count, seed);

  std::vector<ExplainMethod> methods;
  if (args.method_flag.empty())
    methods = {ExplainMethod::kGb1, ExplainMethod::kGb2, ExplainMethod::kMi};
  else
    methods = {method_from_name(args.method_flag)};

  std::vector<std::pair<std::string, AggregateEval>> table;
  for (ExplainMethod method : methods) {
    EvalOptions opts;
    opts.method = method;
    opts.ig_steps = cfg.explain.ig_steps;
    opts.mi = cfg.mi;
    opts.sparsity = args.sparsity;
    opts.soft_mask = (method == ExplainMethod::kMi) &&
                     (args.soft_mask || cfg.eval.soft_mask);
    opts.jobs = args.jobs > 0 ? args.jobs : cfg.eval.jobs;
    opts.validate();

    std::cerr << "evaluating " << method_name(method) << " on " << pairs.size()
              << " pairs (seed " << seed << ", sparsity " << args.sparsity
              << ", jobs " << opts.jobs << ")\n";
    std::vector<PairEvalRecord> records;
    const AggregateEval agg = evaluate_method(model, opts, pairs, &records);
    std::cerr << "  fid_a " << fmt6(agg.fid_a_mean) << ", fid_b "
              << fmt6(agg.fid_b_mean) << ", eo " << fmt6(agg.eo) << " ("
              << agg.pairs_evaluated << " evaluated, " << agg.pairs_skipped
              << " skipped)\n";

    const std::string rp =
        out + "/eval_report_" + method_name(method) + ".json";
    write_eval_report(rp, method_name(method), args.sparsity, agg, records,
                      args.records, cfg);
    std::cerr << "wrote " << rp << "\n";
    table.emplace_back(method_name(method), agg);
  }

  const std::string csv = out + "/eval_table.csv";
  write_eval_table_csv(csv, table);
  std::cerr << "wrote " << csv << "\n";
  return 0;
}

int run_sweep(const CommonArgs& common, const std::string& checkpoint_path,
              const std::string& method_flag, int pairs,
              std::vector<double> levels, int jobs) {
  const RunConfig cfg = parse_config(common.config_path);
  const std::string out = resolve_out_dir(common.out_dir, cfg);
  ensure_dir(out);

  const Graph g = load_dataset(cfg);
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  ScoreModel model(g, ck.params);

  const ExplainMethod method = method_flag.empty()
                                   ? cfg.explain.method
                                   : method_from_name(method_flag);
  if (levels.empty()) {
    levels = cfg.eval.sparsity_levels;
    // A single default level means the config did not ask for a sweep; use
    // the standard ten-point grid instead.
    if (levels.size() <= 1) {
      levels.clear();
      for (int k = 0; k < 10; ++k) levels.push_back(k / 10.0);
    }
  }

  EvalOptions opts;
  opts.method = method;
  opts.ig_steps = cfg.explain.ig_steps;
  opts.mi = cfg.mi;
  opts.soft_mask = (method == ExplainMethod::kMi) && cfg.eval.soft_mask;
  opts.jobs = jobs > 0 ? jobs : cfg.eval.jobs;

  const int pair_count = pairs > 0 ? pairs : cfg.eval.pairs;
  std::vector<std::uint64_t> seeds = cfg.eval.seeds;
  if (seeds.empty()) seeds = {1};

  std::cerr << "sweeping " << method_name(method) << " over " << levels.size()
            << " sparsity levels, " << seeds.size() << " seeds, " << pair_count
            << " pairs each\n";
  const SweepResult sweep =
      sweep_sparsity(model, opts, levels, pair_count, seeds);

  const std::string jp = out + "/sweep_" + method_name(method) + ".json";
  const std::string cp = out + "/sweep_" + method_name(method) + ".csv";
  write_sweep_report(jp, method_name(method), sweep, cfg);
  write_sweep_csv(cp, sweep);
  std::cerr << "wrote " << jp << " and " << cp << "\n";
  return 0;
}

int run_export_dot(const std::string& explanation_path, const std::string& out,
                   int top_k) {
  const ExplanationDoc doc = load_explanation(explanation_path);
  export_dot(doc, out, top_k);
  std::cerr << "wrote " << out << " (" << doc.edges.size() << " edges"
            << (top_k > 0 ? ", top " + std::to_string(top_k) : "") << ")\n";
  return 0;
}

int run_gen_synthetic(std::vector<int> blocks, double p_in, double p_out,
                      int features, std::uint64_t seed, std::string out_dir,
                      const std::string& name) {
  if (out_dir.empty()) {
    if (const char* env = std::getenv("SIMEX_OUT_DIR"); env && *env)
      out_dir = env;
    else
      out_dir = ".";
  }
  ensure_dir(out_dir);

  const Graph g = generate_sbm(blocks, p_in, p_out, features, seed);
  const std::string epath = out_dir + "/" + name + ".edges";
  const std::string fpath = out_dir + "/" + name + ".features.csv";

  std::string comment = "synthetic block-model graph, blocks";
  for (int b : blocks) comment += " " + std::to_string(b);
  comment += ", seed " + std::to_string(seed);
  write_edges_file(epath, g, comment);
  write_features_csv(fpath, g);

  std::cerr << "generated " << g.node_count() << " nodes, " << g.edge_count()
            << " edges\n";
  std::cout << epath << "\n" << fpath << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Node-pair similarity explanations for 2-layer graph convolutional "
      "encoders: training, edge attribution and evaluation."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  CommonArgs common;
  EvalArgs eval_args;
  std::string checkpoint_path, method_flag, explanation_path, dot_out, name;
  std::vector<int> pair, blocks;
  std::vector<double> levels;
  int ig_steps = 0, top = 5, top_k = 0, sweep_pairs = 0, sweep_jobs = 0;
  double p_in = 0.5, p_out = 0.05;
  int features = 16;
  std::uint64_t gen_seed = 1;

  const char* out_help =
      "Output directory (default: $SIMEX_OUT_DIR, then the config's "
      "output_dir)";

  auto* t = app.add_subcommand("train", "Train an encoder and write a checkpoint");
  t->add_option("--config", common.config_path, "JSON run configuration")
      ->required();
  t->add_option("--out", common.out_dir, out_help);

  auto* x = app.add_subcommand("explain",
                               "Attribute one node pair's similarity to edges");
  x->add_option("--config", common.config_path, "JSON run configuration")
      ->required();
  x->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")
      ->required();
  x->add_option("--pair", pair, "Node pair i j")->expected(2)->required();
  x->add_option("--method", method_flag, "gb1 | gb2 | mi (default from config)");
  x->add_option("--ig-steps", ig_steps, "Integration steps for gb2");
  x->add_option("--top", top, "Edges to print on stdout")->default_val(5);
  x->add_option("--out", common.out_dir, out_help);

  auto* e = app.add_subcommand("eval",
                               "Fidelity and effect-overlap over sampled pairs");
  e->add_option("--config", common.config_path, "JSON run configuration")
      ->required();
  e->add_option("--checkpoint", eval_args.checkpoint_path, "Trained checkpoint")
      ->required();
  e->add_option("--method", eval_args.method_flag,
                "gb1 | gb2 | mi (default: all three)");
  e->add_option("--pairs", eval_args.pairs, "Number of sampled pairs");
  auto* seed_opt =
      e->add_option("--seed", eval_args.seed, "Pair-sampling seed");
  e->add_option("--sparsity", eval_args.sparsity,
                "Fraction of weakest attributions to drop")
      ->default_val(0.0);
  e->add_option("--jobs", eval_args.jobs, "Worker threads");
  e->add_flag("--soft-mask", eval_args.soft_mask,
              "Intervene with literal mask values (mi only)");
  e->add_flag("--records", eval_args.records,
              "Include per-pair records in the report");
  e->add_option("--out", common.out_dir, out_help);

  auto* s = app.add_subcommand("sweep", "Evaluate across sparsity levels");
  s->add_option("--config", common.config_path, "JSON run configuration")
      ->required();
  s->add_option("--checkpoint", checkpoint_path, "Trained checkpoint")
      ->required();
  s->add_option("--method", method_flag, "gb1 | gb2 | mi (default from config)");
  s->add_option("--pairs", sweep_pairs, "Pairs per run");
  s->add_option("--levels", levels, "Sparsity levels (default 0.0..0.9)")
      ->delimiter(',');
  s->add_option("--jobs", sweep_jobs, "Worker threads");
  s->add_option("--out", common.out_dir, out_help);

  auto* d = app.add_subcommand("export-dot", "Render an explanation as DOT");
  d->add_option("--explanation", explanation_path, "Explanation JSON")
      ->required();
  d->add_option("--out", dot_out, "Output .dot path")->required();
  d->add_option("--top-k", top_k, "Keep only the k largest |value| edges");

  auto* gsub = app.add_subcommand("gen-synthetic",
                                  "Write a block-model graph to disk");
  gsub->add_option("--blocks", blocks, "Comma-separated block sizes")
      ->delimiter(',')
      ->required();
  gsub->add_option("--p-in", p_in, "Within-block edge probability")
      ->default_val(0.5);
  gsub->add_option("--p-out", p_out, "Cross-block edge probability")
      ->default_val(0.05);
  gsub->add_option("--features", features, "Feature dimension")->default_val(16);
  gsub->add_option("--seed", gen_seed, "Generator seed")->default_val(1);
  gsub->add_option("--out", common.out_dir, out_help);
  gsub->add_option("--name", name, "Output file prefix")
      ->default_val("synthetic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (t->parsed()) return run_train(common);
    if (x->parsed()) {
      if (pair[0] == pair[1]) {
        std::cerr << "error: --pair wants two distinct nodes\n";
        return kExitUsage;
      }
      return run_explain(common, checkpoint_path, pair, method_flag, ig_steps,
                         top);
    }
    if (e->parsed()) {
      eval_args.seed_set = seed_opt->count() > 0;
      return run_eval(common, eval_args);
    }
    if (s->parsed())
      return run_sweep(common, checkpoint_path, method_flag, sweep_pairs,
                       levels, sweep_jobs);
    if (d->parsed()) return run_export_dot(explanation_path, dot_out, top_k);
    if (gsub->parsed())
      return run_gen_synthetic(blocks, p_in, p_out, features, gen_seed,
                               common.out_dir, name);
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const DimensionError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
