#include "simex/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace simex {

using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(origin + ": invalid JSON");
  return j;
}

json read_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path);
}

// --- strict config schema -------------------------------------------------

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw ParseError("unknown config key \"" +
                       (path.empty() ? key : path + "." + key) + "\"");
  }
}

std::string sub_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void get_int(const json& obj, const std::string& path, const char* key,
             int& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ParseError(sub_path(path, key) + ": expected an integer");
  target = v.get<int>();
}

void get_double(const json& obj, const std::string& path, const char* key,
                double& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number())
    throw ParseError(sub_path(path, key) + ": expected a number");
  target = v.get<double>();
}

void get_bool(const json& obj, const std::string& path, const char* key,
              bool& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_boolean())
    throw ParseError(sub_path(path, key) + ": expected a boolean");
  target = v.get<bool>();
}

void get_string(const json& obj, const std::string& path, const char* key,
                std::string& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_string())
    throw ParseError(sub_path(path, key) + ": expected a string");
  target = v.get<std::string>();
}

void get_seed(const json& obj, const std::string& path, const char* key,
              std::uint64_t& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
    throw ParseError(sub_path(path, key) + ": expected a non-negative integer");
  target = v.get<std::uint64_t>();
}

template <typename T, typename Check>
void get_array(const json& obj, const std::string& path, const char* key,
               std::vector<T>& target, Check check, const char* kind) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array())
    throw ParseError(sub_path(path, key) + ": expected an array");
  target.clear();
  for (const json& item : v) {
    if (!check(item))
      throw ParseError(sub_path(path, key) + ": expected " + kind + " entries");
    target.push_back(item.get<T>());
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  const json root = parse_json(text, origin);
  require_object(root, origin);
  check_keys(root, "", {"dataset", "output_dir", "train", "grid", "mi",
                        "explain", "eval"});

  RunConfig cfg;
  if (root.contains("dataset")) {
    const json& d = root.at("dataset");
    require_object(d, "dataset");
    check_keys(d, "dataset", {"edges", "features"});
    get_string(d, "dataset", "edges", cfg.dataset.edges);
    get_string(d, "dataset", "features", cfg.dataset.features);
  }
  get_string(root, "", "output_dir", cfg.output_dir);

  if (root.contains("train")) {
    const json& t = root.at("train");
    require_object(t, "train");
    check_keys(t, "train",
               {"trainer", "hidden_dim", "embed_dim", "learning_rate",
                "epochs", "negative_ratio", "kl_weight", "seed"});
    std::string trainer = trainer_name(cfg.train.trainer);
    get_string(t, "train", "trainer", trainer);
    try {
      cfg.train.trainer = trainer_from_name(trainer);
    } catch (const ValidationError& e) {
      throw ParseError(std::string("train.trainer: ") + e.what());
    }
    get_int(t, "train", "hidden_dim", cfg.train.hidden_dim);
    get_int(t, "train", "embed_dim", cfg.train.embed_dim);
    get_double(t, "train", "learning_rate", cfg.train.learning_rate);
    get_int(t, "train", "epochs", cfg.train.epochs);
    get_double(t, "train", "negative_ratio", cfg.train.negative_ratio);
    get_double(t, "train", "kl_weight", cfg.train.kl_weight);
    get_seed(t, "train", "seed", cfg.train.seed);
  }

  if (root.contains("grid")) {
    const json& gq = root.at("grid");
    require_object(gq, "grid");
    check_keys(gq, "grid",
               {"learning_rates", "hidden_dims", "embed_dims", "kl_weights"});
    auto is_num = [](const json& v) { return v.is_number(); };
    auto is_int = [](const json& v) {
      return v.is_number_integer() || v.is_number_unsigned();
    };
    get_array<double>(gq, "grid", "learning_rates", cfg.grid.learning_rates,
                      is_num, "number");
    get_array<int>(gq, "grid", "hidden_dims", cfg.grid.hidden_dims, is_int,
                   "integer");
    get_array<int>(gq, "grid", "embed_dims", cfg.grid.embed_dims, is_int,
                   "integer");
    get_array<double>(gq, "grid", "kl_weights", cfg.grid.kl_weights, is_num,
                      "number");
  }

  if (root.contains("mi")) {
    const json& m = root.at("mi");
    require_object(m, "mi");
    check_keys(m, "mi",
               {"steps", "learning_rate", "size_weight", "entropy_weight",
                "seed"});
    get_int(m, "mi", "steps", cfg.mi.steps);
    get_double(m, "mi", "learning_rate", cfg.mi.learning_rate);
    get_double(m, "mi", "size_weight", cfg.mi.size_weight);
    get_double(m, "mi", "entropy_weight", cfg.mi.entropy_weight);
    get_seed(m, "mi", "seed", cfg.mi.seed);
  }

  if (root.contains("explain")) {
    const json& e = root.at("explain");
    require_object(e, "explain");
    check_keys(e, "explain", {"method", "ig_steps"});
    std::string method = method_name(cfg.explain.method);
    get_string(e, "explain", "method", method);
    try {
      cfg.explain.method = method_from_name(method);
    } catch (const ValidationError& ex) {
      throw ParseError(std::string("explain.method: ") + ex.what());
    }
    get_int(e, "explain", "ig_steps", cfg.explain.ig_steps);
  }

  if (root.contains("eval")) {
    const json& e = root.at("eval");
    require_object(e, "eval");
    check_keys(e, "eval",
               {"pairs", "seeds", "sparsity_levels", "soft_mask", "jobs"});
    get_int(e, "eval", "pairs", cfg.eval.pairs);
    auto is_seed = [](const json& v) {
      return v.is_number_unsigned() ||
             (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    };
    get_array<std::uint64_t>(e, "eval", "seeds", cfg.eval.seeds, is_seed,
                             "non-negative integer");
    auto is_num = [](const json& v) { return v.is_number(); };
    get_array<double>(e, "eval", "sparsity_levels", cfg.eval.sparsity_levels,
                      is_num, "number");
    get_bool(e, "eval", "soft_mask", cfg.eval.soft_mask);
    get_int(e, "eval", "jobs", cfg.eval.jobs);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  return parse_config_text(read_text_file(path), path);
}

namespace {

json config_to_json(const RunConfig& cfg) {
  json j;
  j["dataset"]["edges"] = cfg.dataset.edges;
  j["dataset"]["features"] = cfg.dataset.features;
  j["output_dir"] = cfg.output_dir;
  j["train"]["trainer"] = trainer_name(cfg.train.trainer);
  j["train"]["hidden_dim"] = cfg.train.hidden_dim;
  j["train"]["embed_dim"] = cfg.train.embed_dim;
  j["train"]["learning_rate"] = cfg.train.learning_rate;
  j["train"]["epochs"] = cfg.train.epochs;
  j["train"]["negative_ratio"] = cfg.train.negative_ratio;
  j["train"]["kl_weight"] = cfg.train.kl_weight;
  j["train"]["seed"] = cfg.train.seed;
  j["grid"]["learning_rates"] = cfg.grid.learning_rates;
  j["grid"]["hidden_dims"] = cfg.grid.hidden_dims;
  j["grid"]["embed_dims"] = cfg.grid.embed_dims;
  j["grid"]["kl_weights"] = cfg.grid.kl_weights;
  j["mi"]["steps"] = cfg.mi.steps;
  j["mi"]["learning_rate"] = cfg.mi.learning_rate;
  j["mi"]["size_weight"] = cfg.mi.size_weight;
  j["mi"]["entropy_weight"] = cfg.mi.entropy_weight;
  j["mi"]["seed"] = cfg.mi.seed;
  j["explain"]["method"] = method_name(cfg.explain.method);
  j["explain"]["ig_steps"] = cfg.explain.ig_steps;
  j["eval"]["pairs"] = cfg.eval.pairs;
  j["eval"]["seeds"] = cfg.eval.seeds;
  j["eval"]["sparsity_levels"] = cfg.eval.sparsity_levels;
  j["eval"]["soft_mask"] = cfg.eval.soft_mask;
  j["eval"]["jobs"] = cfg.eval.jobs;
  return j;
}

}  // namespace

std::string config_echo_json(const RunConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canon = config_to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw ParseError(what + ": malformed matrix object");
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (!data.is_array() ||
      static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError(what + ": matrix data length mismatch");
  Matrix m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(k++).get<double>();
  return m;
}

void check_artifact_header(const json& j, const std::string& path,
                           const std::string& kind) {
  if (!j.is_object() || !j.contains("format_version") || !j.contains("kind"))
    throw ParseError(path + ": missing artifact header");
  if (!j.at("format_version").is_number_integer() ||
      j.at("format_version").get<int>() != kFormatVersion)
    throw ParseError(path + ": incompatible format version (expected " +
                     std::to_string(kFormatVersion) + ")");
  if (j.at("kind").get<std::string>() != kind)
    throw ParseError(path + ": expected artifact kind \"" + kind + "\"");
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const RunConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "checkpoint";
  j["config_hash"] = config_hash(cfg);
  j["trainer"] = trainer_name(params.trainer);
  j["dims"]["input"] = params.input_dim();
  j["dims"]["hidden"] = params.hidden_dim();
  j["dims"]["embed"] = params.embed_dim();
  j["activations"] = {"relu", "identity"};
  j["theta1"] = matrix_to_json(params.theta1);
  j["theta2"] = matrix_to_json(params.theta2);
  if (params.trainer == TrainerKind::kVgae)
    j["theta2_logvar"] = matrix_to_json(params.theta2_logvar);
  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  const json j = read_json_file(path);
  check_artifact_header(j, path, "checkpoint");
  Checkpoint ck;
  ck.params.trainer = trainer_from_name(j.at("trainer").get<std::string>());
  ck.params.theta1 = matrix_from_json(j.at("theta1"), path + ": theta1");
  ck.params.theta2 = matrix_from_json(j.at("theta2"), path + ": theta2");
  if (ck.params.trainer == TrainerKind::kVgae)
    ck.params.theta2_logvar =
        matrix_from_json(j.at("theta2_logvar"), path + ": theta2_logvar");
  ck.config_hash = j.at("config_hash").get<std::string>();
  ck.params.validate(ck.params.input_dim());
  return ck;
}

namespace {

json train_report_to_json(const TrainReport& r) {
  json j;
  j["trainer"] = trainer_name(r.config.trainer);
  j["hidden_dim"] = r.config.hidden_dim;
  j["embed_dim"] = r.config.embed_dim;
  j["learning_rate"] = r.config.learning_rate;
  j["epochs"] = r.config.epochs;
  j["kl_weight"] = r.config.kl_weight;
  j["seed"] = r.config.seed;
  j["loss_curve"] = r.loss_curve;
  if (std::isfinite(r.final_loss))
    j["final_loss"] = r.final_loss;
  else
    j["final_loss"] = nullptr;
  j["wall_time_sec"] = r.wall_time_sec;
  j["diverged"] = r.diverged;
  return j;
}

}  // namespace

void write_train_report(const std::string& path, const TrainReport& best,
                        const std::vector<TrainReport>& grid_reports,
                        const RunConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "train_report";
  j["config_hash"] = config_hash(cfg);
  j["config"] = config_to_json(cfg);
  j["best"] = train_report_to_json(best);
  json grid = json::array();
  for (const TrainReport& r : grid_reports) grid.push_back(train_report_to_json(r));
  j["grid"] = std::move(grid);
  write_text_file(path, j.dump(2) + "\n");
}

ExplanationDoc make_explanation_doc(const Graph& g, const ExplanationMatrix& m,
                                    const std::string& hash) {
  ExplanationDoc doc;
  doc.method = m.method;
  doc.i = m.i;
  doc.j = m.j;
  doc.score = m.score;
  doc.threshold = m.threshold;
  doc.config_hash = hash;
  doc.edges.reserve(m.edge_indices.size());
  for (std::size_t k = 0; k < m.edge_indices.size(); ++k) {
    const Edge& e = g.edges()[m.edge_indices[k]];
    doc.edges.emplace_back(e.u, e.v, m.values[k]);
  }
  return doc;
}

void save_explanation(const std::string& path, const ExplanationDoc& doc) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "explanation";
  j["config_hash"] = doc.config_hash;
  j["method"] = doc.method;
  j["pair"] = {doc.i, doc.j};
  j["score"] = doc.score;
  j["threshold"] = doc.threshold;
  json edges = json::array();
  for (const auto& [u, v, value] : doc.edges) {
    json e;
    e["u"] = u;
    e["v"] = v;
    e["value"] = value;
    edges.push_back(std::move(e));
  }
  j["edges"] = std::move(edges);
  write_text_file(path, j.dump(2) + "\n");
}

ExplanationDoc load_explanation(const std::string& path) {
  const json j = read_json_file(path);
  check_artifact_header(j, path, "explanation");
  ExplanationDoc doc;
  doc.config_hash = j.at("config_hash").get<std::string>();
  doc.method = j.at("method").get<std::string>();
  const auto& pair = j.at("pair");
  if (!pair.is_array() || pair.size() != 2)
    throw ParseError(path + ": pair must be a two-element array");
  doc.i = pair.at(0).get<NodeId>();
  doc.j = pair.at(1).get<NodeId>();
  doc.score = j.at("score").get<double>();
  doc.threshold = j.at("threshold").get<double>();
  for (const json& e : j.at("edges"))
    doc.edges.emplace_back(e.at("u").get<NodeId>(), e.at("v").get<NodeId>(),
                           e.at("value").get<double>());
  return doc;
}

void export_dot(const ExplanationDoc& doc, const std::string& path, int top_k) {
  if (top_k < 0) throw ValidationError("top_k must be non-negative");
  auto kept = doc.edges;
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(std::get<2>(a));
    const double mb = std::abs(std::get<2>(b));
    if (ma != mb) return ma > mb;
    return std::tie(std::get<0>(a), std::get<1>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b));
  });
  if (top_k > 0 && static_cast<int>(kept.size()) > top_k) kept.resize(top_k);

  double vmax = 0.0;
  for (const auto& e : kept) vmax = std::max(vmax, std::abs(std::get<2>(e)));
  if (vmax == 0.0) vmax = 1.0;

  const bool mask_style = doc.method == "mi";
  std::ostringstream out;
  out << "graph explanation {\n";
  out << "  // method " << doc.method << ", pair (" << doc.i << ", " << doc.j
      << "), score " << doc.score << "\n";
  out << "  node [shape=circle, fontsize=10];\n";
  out << "  \"" << doc.i << "\" [style=filled, fillcolor=lightblue];\n";
  out << "  \"" << doc.j << "\" [style=filled, fillcolor=lightblue];\n";
  char buf[64];
  for (const auto& [u, v, value] : kept) {
    const char* color;
    if (mask_style)
      color = value >= doc.threshold ? "blue" : "gray";
    else
      color = value > 0.0 ? "blue" : (value < 0.0 ? "red" : "gray");
    const double width = 0.5 + 3.5 * std::abs(value) / vmax;
    std::snprintf(buf, sizeof(buf), "%.2f", width);
    out << "  \"" << u << "\" -- \"" << v << "\" [color=" << color
        << ", penwidth=" << buf << "];\n";
  }
  out << "}\n";
  write_text_file(path, out.str());
}

namespace {

json aggregate_to_json(const AggregateEval& a) {
  json j;
  j["fid_a_mean"] = a.fid_a_mean;
  j["fid_b_mean"] = a.fid_b_mean;
  j["a_pos"] = a.a_pos;
  j["a_neg"] = a.a_neg;
  j["b_pos"] = a.b_pos;
  j["b_neg"] = a.b_neg;
  j["eo"] = a.eo;
  j["pairs_evaluated"] = a.pairs_evaluated;
  j["pairs_skipped"] = a.pairs_skipped;
  return j;
}

}  // namespace

void write_eval_report(const std::string& path, const std::string& method,
                       double sparsity, const AggregateEval& agg,
                       const std::vector<PairEvalRecord>& records,
                       bool include_records, const RunConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "eval_report";
  j["config_hash"] = config_hash(cfg);
  j["method"] = method;
  j["sparsity"] = sparsity;
  j["aggregate"] = aggregate_to_json(agg);
  if (include_records) {
    json rows = json::array();
    for (const PairEvalRecord& r : records) {
      json e;
      e["i"] = r.i;
      e["j"] = r.j;
      e["skipped"] = r.skipped;
      if (r.skipped) {
        e["skip_reason"] = r.skip_reason;
      } else {
        e["score"] = r.score;
        e["score_a"] = r.score_a;
        e["score_b"] = r.score_b;
        e["fid_a"] = r.fid_a;
        e["fid_b"] = r.fid_b;
        e["above_kept"] = r.above_kept;
        e["below_kept"] = r.below_kept;
      }
      rows.push_back(std::move(e));
    }
    j["records"] = std::move(rows);
  }
  write_text_file(path, j.dump(2) + "\n");
}

void write_eval_table_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, AggregateEval>>& rows) {
  std::ostringstream out;
  out << "method,fid_a,fid_b,eo\n";
  char buf[128];
  for (const auto& [name, agg] : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n", name.c_str(),
                  agg.fid_a_mean, agg.fid_b_mean, agg.eo);
    out << buf;
  }
  write_text_file(path, out.str());
}

void write_sweep_report(const std::string& path, const std::string& method,
                        const SweepResult& sweep, const RunConfig& cfg) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "sweep_report";
  j["config_hash"] = config_hash(cfg);
  j["method"] = method;
  json levels = json::array();
  for (const SweepPoint& p : sweep) {
    json e;
    e["sparsity"] = p.sparsity;
    e["fid_a_mean"] = p.fid_a_mean;
    e["fid_a_halfwidth"] = p.fid_a_halfwidth;
    e["fid_b_mean"] = p.fid_b_mean;
    e["fid_b_halfwidth"] = p.fid_b_halfwidth;
    e["eo_mean"] = p.eo_mean;
    e["eo_halfwidth"] = p.eo_halfwidth;
    json runs = json::array();
    for (const AggregateEval& a : p.runs) runs.push_back(aggregate_to_json(a));
    e["runs"] = std::move(runs);
    levels.push_back(std::move(e));
  }
  j["levels"] = std::move(levels);
  write_text_file(path, j.dump(2) + "\n");
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  std::ostringstream out;
  out << "sparsity,fid_a_mean,fid_a_hw,fid_b_mean,fid_b_hw,eo_mean,eo_hw\n";
  char buf[192];
  for (const SweepPoint& p : sweep) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  p.sparsity, p.fid_a_mean, p.fid_a_halfwidth, p.fid_b_mean,
                  p.fid_b_halfwidth, p.eo_mean, p.eo_halfwidth);
    out << buf;
  }
  write_text_file(path, out.str());
}

void write_edges_file(const std::string& path, const Graph& g,
                      const std::string& comment) {
  std::ostringstream out;
  if (!comment.empty()) out << "# " << comment << "\n";
  for (const Edge& e : g.edges()) out << e.u << " " << e.v << "\n";
  write_text_file(path, out.str());
}

void write_features_csv(const std::string& path, const Graph& g) {
  std::ostringstream out;
  char buf[40];
  const Matrix& x = g.features();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", x(r, c));
      out << (c == 0 ? "" : ",") << buf;
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace simex
