#include "rdsnet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdsnet/count_models.hpp"
#include "rdsnet/csv.hpp"
#include "rdsnet/ergm.hpp"
#include "rdsnet/estimators.hpp"
#include "rdsnet/graph.hpp"
#include "rdsnet/rds.hpp"
#include "rdsnet/rng.hpp"
#include "rdsnet/survey.hpp"
#include "rdsnet/trees.hpp"

namespace rdsnet {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Meta {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> params;

  void add(const std::string& k, const std::string& v) { params.emplace_back(k, v); }
  void add(const std::string& k, double v) { params.emplace_back(k, fmt(v)); }
  void add(const std::string& k, int v) { params.emplace_back(k, std::to_string(v)); }

  std::string canonical() const {
    auto sorted = params;
    std::sort(sorted.begin(), sorted.end());
    std::string s = "command=" + command + ";seed=" + std::to_string(seed);
    for (const auto& [k, v] : sorted) s += ";" + k + "=" + v;
    return s;
  }
  std::string hash_hex() const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical())));
    return buf;
  }
};

void write_meta_lines(std::ostream& out, const Meta& m) {
  out << "# rdsnet " << kVersion << "\n";
  out << "# command: " << m.command << "\n";
  out << "# seed: " << m.seed << "\n";
  out << "# config_hash: " << m.hash_hex() << "\n";
}

nlohmann::json meta_json(const Meta& m) {
  nlohmann::json j;
  j["tool"] = std::string("rdsnet ") + kVersion;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["config_hash"] = m.hash_hex();
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  j["params"] = params;
  return j;
}

using Cell = nlohmann::json;

std::string cell_csv(const Cell& c) {
  if (c.is_null()) return "";
  if (c.is_string()) return c.get<std::string>();
  if (c.is_number_integer()) return std::to_string(c.get<long long>());
  if (c.is_number()) return fmt(c.get<double>());
  if (c.is_boolean()) return c.get<bool>() ? "1" : "0";
  return c.dump();
}

Cell opt_cell(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(nullptr);
}

std::filesystem::path out_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return std::filesystem::path(dir) / name;
}

std::string write_table(const std::string& dir, const std::string& stem,
                        FileFormat format, const Meta& meta,
                        const std::vector<std::string>& cols,
                        const std::vector<std::vector<Cell>>& rows) {
  auto path = out_path(dir, stem + (format == FileFormat::csv ? ".csv" : ".json"));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  if (format == FileFormat::csv) {
    write_meta_lines(out, meta);
    std::string line;
    auto emit = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv::escape(fields[i]);
      }
      out << "\r\n";
    };
    emit(cols);
    for (const auto& r : rows) {
      std::vector<std::string> fields;
      fields.reserve(r.size());
      for (const auto& c : r) fields.push_back(cell_csv(c));
      emit(fields);
    }
  } else {
    nlohmann::json doc;
    doc["_meta"] = meta_json(meta);
    doc["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0; i < cols.size() && i < r.size(); ++i) o[cols[i]] = r[i];
      doc["rows"].push_back(std::move(o));
    }
    out << doc.dump(2) << '\n';
  }
  std::cout << "wrote " << path.string() << "\n";
  return path.string();
}

std::string write_json_doc(const std::string& dir, const std::string& name,
                           nlohmann::json doc, const Meta& meta) {
  doc["_meta"] = meta_json(meta);
  auto path = out_path(dir, name);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  std::cout << "wrote " << path.string() << "\n";
  return path.string();
}

FileFormat infer_format(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".json") return FileFormat::json;
  return FileFormat::csv;
}

OrphanPolicy parse_policy(const std::string& s) {
  if (s == "reject") return OrphanPolicy::reject;
  if (s == "seed") return OrphanPolicy::seed;
  throw CLI::ValidationError("--orphan-policy", "must be reject or seed");
}

// "name:level=p,level=p" -> (name, distribution)
std::pair<std::string, std::vector<std::pair<std::string, double>>> parse_attr_spec(
    const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0)
    throw std::runtime_error("bad attribute spec '" + text +
                             "' (expected name:level=p,level=p)");
  std::pair<std::string, std::vector<std::pair<std::string, double>>> out;
  out.first = text.substr(0, colon);
  std::stringstream rest(text.substr(colon + 1));
  std::string piece;
  while (std::getline(rest, piece, ',')) {
    auto eq = piece.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("bad attribute level '" + piece + "' in '" + text + "'");
    out.second.emplace_back(piece.substr(0, eq), std::stod(piece.substr(eq + 1)));
  }
  if (out.second.empty())
    throw std::runtime_error("attribute spec '" + text + "' has no levels");
  return out;
}

// ---------------------------------------------------------------------------
// Option bundles (bound to CLI11, consumed by the command functions)

struct GlobalOpts {
  std::string output_dir = ".";
  std::string format = "csv";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  FileFormat file_format() const {
    return format == "json" ? FileFormat::json : FileFormat::csv;
  }
};

struct DataOpts {
  std::string path;
  int top_code = 20;
  std::string orphan_policy = "reject";

  SurveyDataset load() const {
    return load_dataset(path, infer_format(path), top_code, parse_policy(orphan_policy));
  }
};

int cmd_validate(const DataOpts& data) {
  LoadResult lr = load_dataset_checked(data.path, infer_format(data.path), data.top_code,
                                       parse_policy(data.orphan_policy));
  int hard = 0, soft = 0;
  for (const auto& issue : lr.issues) {
    (issue.hard ? hard : soft) += 1;
    std::cout << "row " << issue.row << ": " << issue.message
              << (issue.hard ? "  [violation]" : "  [warning]") << "\n";
  }
  std::cout << hard << " hard violations, " << soft << " warnings ("
            << lr.dataset.n() << " records)\n";
  return hard > 0 ? 1 : 0;
}

struct EstimateOpts {
  std::vector<std::string> variables = {"acquaintance_degree", "close_friend_degree",
                                        "kinship_degree", "referral_out_degree"};
  std::string by;
  std::string weight = "acquaintance_degree";
  int bootstrap = 1000;
  std::uint64_t seed = 0;
};

int cmd_estimate(const GlobalOpts& g, const DataOpts& data, const EstimateOpts& opt) {
  SurveyDataset ds = data.load();
  ReferralForest forest = forest_from_dataset(ds);
  Meta meta;
  meta.command = "estimate";
  meta.seed = opt.seed;
  meta.add("dataset", data.path);
  meta.add("weight", opt.weight);
  meta.add("bootstrap", opt.bootstrap);
  if (!opt.by.empty()) meta.add("by", opt.by);

  const std::vector<std::string> cols = {"term",    "estimate", "ci_low", "ci_high",
                                         "se",      "de",       "n"};
  for (bool include_seeds : {true, false}) {
    std::vector<std::vector<Cell>> rows;
    std::uint64_t idx = 0;
    for (const auto& var : opt.variables) {
      RdsEstimate e = estimate_with_se(ds, forest, var, opt.weight, include_seeds,
                                       opt.bootstrap,
                                       substream_seed(opt.seed, include_seeds ? 0xE5 : 0xE6, idx++),
                                       g.threads);
      rows.push_back({Cell(var), Cell(e.estimate), opt_cell(e.ci_low), opt_cell(e.ci_high),
                      opt_cell(e.se), opt_cell(e.design_effect), Cell(e.n)});
    }
    write_table(g.output_dir, include_seeds ? "estimates_all" : "estimates_noseeds",
                g.file_format(), meta, cols, rows);
  }

  if (!opt.by.empty()) {
    auto cells = subgroup_table(ds, forest, opt.by, opt.variables, opt.weight, true,
                                opt.bootstrap, substream_seed(opt.seed, 0xE7, 0), g.threads);
    std::vector<std::vector<Cell>> rows;
    for (const auto& c : cells) {
      std::vector<Cell> row{Cell(c.level), Cell(c.network)};
      if (c.est) {
        row.insert(row.end(), {Cell(c.est->estimate), opt_cell(c.est->ci_low),
                               opt_cell(c.est->ci_high), opt_cell(c.est->se),
                               opt_cell(c.est->design_effect), Cell(c.est->n)});
      } else {
        row.insert(row.end(), {Cell(nullptr), Cell(nullptr), Cell(nullptr), Cell(nullptr),
                               Cell(nullptr), Cell(0)});
      }
      rows.push_back(std::move(row));
    }
    write_table(g.output_dir, "subgroups", g.file_format(), meta,
                {"level", "network", "estimate", "ci_low", "ci_high", "se", "de", "n"}, rows);
  }
  return 0;
}

struct FitOpts {
  std::string response;
  std::vector<std::string> terms;
  std::vector<std::string> zero_terms;
  std::string family = "auto";
  bool no_stepwise = false;
  std::vector<std::string> refs;  // attr=level reference overrides
  int starts = 3;
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

std::string coefficient_component(const std::string& name) {
  if (name == "log_alpha") return "dispersion";
  if (name.rfind("zero.", 0) == 0) return "zero";
  return "conditional";
}

void print_fit_text(const CountModelFit& f) {
  std::cout << "family: " << family_name(f.family) << "   n=" << f.n << "  k=" << f.k
            << "  loglik=" << fmt(f.loglik) << (f.converged ? "" : "  [not converged]")
            << (f.boundary ? "  [boundary]" : "") << "\n";
  std::size_t w = 12;
  for (const auto& c : f.coefficients) w = std::max(w, c.name.size());
  std::cout << std::string(w + 2, ' ') << "estimate        se         z         p\n";
  for (const auto& c : f.coefficients) {
    char line[256];
    std::snprintf(line, sizeof(line), "  %-*s %9.4f %9s %9s %9s %s\n",
                  static_cast<int>(w), c.name.c_str(), c.estimate,
                  c.se ? fmt(*c.se).c_str() : "---", c.z ? fmt(*c.z).c_str() : "---",
                  c.p_value ? fmt(*c.p_value).c_str() : "---", c.stars.c_str());
    std::cout << line;
  }
  std::cout << "  AIC " << fmt(f.criteria.aic) << "  AICc "
            << (f.criteria.aicc ? fmt(*f.criteria.aicc) : "---") << "  BIC "
            << fmt(f.criteria.bic) << "  RMSE " << fmt(f.rmse) << "\n";
}

int cmd_fit(const GlobalOpts& g, const DataOpts& data, const FitOpts& opt) {
  SurveyDataset ds = data.load();
  std::map<std::string, std::string> refs;
  for (const auto& r : opt.refs) {
    auto eq = r.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("bad --ref '" + r + "' (expected attr=level)");
    refs[r.substr(0, eq)] = r.substr(eq + 1);
  }
  ModelSpec spec;
  spec.family = opt.zero_terms.empty() ? Family::poisson : Family::zinb;
  spec.response = opt.response;
  spec.conditional_terms = opt.terms;
  spec.zero_terms = opt.zero_terms;
  ModelData md = model_data_from_dataset(ds, spec, refs);

  FitOptions fo;
  fo.tol = opt.tol;
  fo.max_iter = opt.max_iter;
  fo.n_starts = opt.starts;
  fo.rng_seed = opt.seed;

  Meta meta;
  meta.command = "fit";
  meta.seed = opt.seed;
  meta.add("dataset", data.path);
  meta.add("response", opt.response);
  meta.add("family", opt.family);

  std::vector<Family> candidates = {Family::poisson, Family::negbin, Family::zip,
                                    Family::zinb};
  auto ranking = family_selection(md, candidates, fo);
  {
    std::vector<std::vector<Cell>> rows;
    for (const auto& r : ranking) {
      if (r.fit) {
        const auto& f = *r.fit;
        rows.push_back({Cell(family_name(r.family)), Cell(true), Cell(f.loglik),
                        Cell(f.criteria.aic), opt_cell(f.criteria.aicc),
                        Cell(f.criteria.bic), Cell(f.rmse), Cell(f.k), Cell(f.n)});
      } else {
        rows.push_back({Cell(family_name(r.family)), Cell(false), Cell(nullptr),
                        Cell(nullptr), Cell(nullptr), Cell(nullptr), Cell(nullptr),
                        Cell(nullptr), Cell(nullptr)});
      }
    }
    write_table(g.output_dir, "selection", g.file_format(), meta,
                {"family", "converged", "loglik", "aic", "aicc", "bic", "rmse", "k", "n"},
                rows);
  }

  Family chosen;
  if (opt.family == "auto") {
    if (!ranking.front().fit) throw std::runtime_error("no family converged");
    chosen = ranking.front().family;
  } else {
    chosen = parse_family(opt.family);
  }

  CountModelFit final_fit;
  std::vector<StepCandidate> trace;
  if (opt.no_stepwise) {
    final_fit = fit(chosen, md, fo);
  } else {
    StepwiseResult sw = stepwise_backward(chosen, md, fo);
    final_fit = std::move(sw.best);
    trace = std::move(sw.trace);
  }

  nlohmann::json model;
  model["family"] = family_name(final_fit.family);
  model["response"] = opt.response;
  model["n"] = final_fit.n;
  model["k"] = final_fit.k;
  model["loglik"] = final_fit.loglik;
  model["aic"] = final_fit.criteria.aic;
  model["aicc"] = final_fit.criteria.aicc ? Cell(*final_fit.criteria.aicc) : Cell(nullptr);
  model["bic"] = final_fit.criteria.bic;
  model["rmse"] = final_fit.rmse;
  model["converged"] = final_fit.converged;
  model["boundary"] = final_fit.boundary;
  model["coefficients"] = nlohmann::json::array();
  for (const auto& c : final_fit.coefficients) {
    nlohmann::json o;
    o["name"] = c.name;
    o["component"] = coefficient_component(c.name);
    o["estimate"] = c.estimate;
    o["se"] = opt_cell(c.se);
    o["z"] = opt_cell(c.z);
    o["p"] = opt_cell(c.p_value);
    o["stars"] = c.stars;
    model["coefficients"].push_back(std::move(o));
  }
  model["stepwise_trace"] = nlohmann::json::array();
  for (const auto& t : trace) {
    nlohmann::json o;
    o["component"] = t.component;
    o["term"] = t.term;
    o["aicc"] = opt_cell(t.aicc);
    o["removed"] = t.removed;
    model["stepwise_trace"].push_back(std::move(o));
  }
  write_json_doc(g.output_dir, "model.json", std::move(model), meta);

  {
    std::vector<std::vector<Cell>> rows;
    for (const auto& c : final_fit.coefficients)
      rows.push_back({Cell(coefficient_component(c.name)), Cell(c.name), Cell(c.estimate),
                      opt_cell(c.se), opt_cell(c.z), opt_cell(c.p_value), Cell(c.stars)});
    write_table(g.output_dir, "model", g.file_format(), meta,
                {"component", "term", "estimate", "se", "z", "p", "stars"}, rows);
  }
  print_fit_text(final_fit);
  return 0;
}

struct TreesOpts {
  bool labeled = false;
  std::vector<std::string> label_attrs = {"gender"};
};

int cmd_trees(const GlobalOpts& g, const DataOpts& data, const TreesOpts& opt) {
  SurveyDataset ds = data.load();
  ReferralForest forest = forest_from_dataset(ds);
  Meta meta;
  meta.command = "trees";
  meta.add("dataset", data.path);
  meta.add("labeled", opt.labeled ? 1 : 0);

  IsoClassTable census = iso_census(forest, opt.labeled, opt.label_attrs);
  {
    std::vector<std::vector<Cell>> rows;
    for (const auto& e : census.entries)
      rows.push_back({Cell(e.code), Cell(e.multiplicity), Cell(e.example_root_id)});
    write_table(g.output_dir, "census", g.file_format(), meta,
                {"canonical_code", "multiplicity", "example_root"}, rows);
  }
  write_json_doc(g.output_dir, "census_grid.json",
                 nlohmann::json::parse(census_grid_json(census)), meta);

  WaveStats ws = wave_stats(forest);
  {
    std::vector<std::vector<Cell>> rows;
    for (std::size_t w = 0; w < ws.wave_histogram.size(); ++w)
      rows.push_back({Cell(static_cast<int>(w)), Cell(ws.wave_histogram[w])});
    write_table(g.output_dir, "waves", g.file_format(), meta, {"wave", "count"}, rows);
  }
  {
    std::vector<std::vector<Cell>> rows;
    for (const auto& t : ws.per_tree)
      rows.push_back({Cell(t.root_id), Cell(t.size), Cell(t.depth)});
    write_table(g.output_dir, "tree_depths", g.file_format(), meta,
                {"root_id", "size", "depth"}, rows);
  }
  OutDegreeHistogram od = referral_degree_distribution(forest);
  {
    std::vector<std::vector<Cell>> rows;
    for (std::size_t d = 0; d < od.counts.size(); ++d)
      rows.push_back({Cell(static_cast<int>(d)), Cell(od.counts[d])});
    write_table(g.output_dir, "outdegree", g.file_format(), meta,
                {"out_degree", "count"}, rows);
  }
  std::cout << census.tree_count << " trees in " << census.entries.size()
            << " isomorphism classes; max wave " << ws.max_wave
            << "; mean referral out-degree " << fmt(od.mean) << "\n";
  return 0;
}

struct MixingOpts {
  std::string attribute;
  std::vector<std::string> drop;
};

int cmd_mixing(const GlobalOpts& g, const DataOpts& data, const MixingOpts& opt) {
  SurveyDataset ds = data.load();
  ReferralForest forest = forest_from_dataset(ds);
  MixingMatrix m = mixing_matrix(forest, ds, opt.attribute, opt.drop);
  Meta meta;
  meta.command = "mixing";
  meta.add("dataset", data.path);
  meta.add("attribute", opt.attribute);

  std::vector<std::vector<Cell>> rows;
  for (std::size_t r = 0; r < m.categories.size(); ++r)
    for (std::size_t c = 0; c < m.categories.size(); ++c)
      rows.push_back({Cell(m.categories[r]), Cell(m.categories[c]), Cell(m.counts[r][c]),
                      Cell(m.rates[r][c])});
  write_table(g.output_dir, "mixing", g.file_format(), meta,
              {"from", "to", "count", "rate"}, rows);

  std::cout << "recruiter\\recruitee";
  for (const auto& c : m.categories) std::cout << "  " << c;
  std::cout << "\n";
  for (std::size_t r = 0; r < m.categories.size(); ++r) {
    std::cout << m.categories[r];
    for (std::size_t c = 0; c < m.categories.size(); ++c)
      std::cout << "  " << fmt(m.rates[r][c]);
    std::cout << "\n";
  }
  return 0;
}

struct SimulateOpts {
  int nodes = 2000;
  double mean_degree = 8.0;
  std::vector<std::string> attrs;
  int n_seeds = 6;
  std::string seed_selection = "degree";
  int coupons = 3;
  double acceptance = 0.5;
  int target = 500;
  int max_waves = -1;
  std::uint64_t seed = 0;
};

int cmd_simulate(const GlobalOpts& g, const SimulateOpts& opt) {
  AttributedGraph graph = erdos_renyi(opt.nodes, opt.mean_degree,
                                      substream_seed(opt.seed, 0x6A4F, 0));
  std::uint64_t attr_idx = 0;
  for (const auto& spec : opt.attrs) {
    auto [name, dist] = parse_attr_spec(spec);
    assign_attributes(graph, name, dist, substream_seed(opt.seed, 0xA77, attr_idx++));
  }
  RdsConfig cfg;
  cfg.n_seeds = opt.n_seeds;
  cfg.seed_selection = opt.seed_selection == "uniform"
                           ? RdsConfig::SeedSelection::uniform
                           : RdsConfig::SeedSelection::degree_proportional;
  cfg.coupons_per_respondent = opt.coupons;
  cfg.acceptance_prob = opt.acceptance;
  cfg.target_sample = opt.target;
  if (opt.max_waves >= 0) cfg.max_waves = opt.max_waves;
  cfg.rng_seed = substream_seed(opt.seed, 0x2D5, 0);
  RdsResult res = simulate_rds(graph, cfg);

  Meta meta;
  meta.command = "simulate";
  meta.seed = opt.seed;
  meta.add("nodes", opt.nodes);
  meta.add("mean_degree", opt.mean_degree);
  meta.add("n_seeds", opt.n_seeds);
  meta.add("coupons", opt.coupons);
  meta.add("acceptance", opt.acceptance);
  meta.add("target", opt.target);

  if (g.file_format() == FileFormat::csv) {
    auto path = out_path(g.output_dir, "sample.csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_meta_lines(out, meta);
    save_dataset(res.sample, out, FileFormat::csv);
    std::cout << "wrote " << path.string() << "\n";
  } else {
    std::ostringstream buf;
    save_dataset(res.sample, buf, FileFormat::json);
    write_json_doc(g.output_dir, "sample.json", nlohmann::json::parse(buf.str()), meta);
  }
  {
    std::vector<std::vector<Cell>> rows;
    for (int i = 0; i < res.forest.n(); ++i) {
      const auto& p = res.forest.parent[static_cast<std::size_t>(i)];
      rows.push_back({Cell(res.forest.ids[static_cast<std::size_t>(i)]),
                      p ? Cell(res.forest.ids[static_cast<std::size_t>(*p)]) : Cell(""),
                      Cell(res.forest.wave[static_cast<std::size_t>(i)])});
    }
    write_table(g.output_dir, "forest", FileFormat::csv, meta,
                {"respondent_id", "parent_id", "wave"}, rows);
  }
  WaveStats ws = wave_stats(res.forest);
  std::cout << "sampled " << res.sample.n() << " of target " << opt.target
            << (res.shortfall ? " (shortfall: frontier exhausted)" : "") << "; max wave "
            << ws.max_wave << "\n";
  return 0;
}

struct ErgmOpts {
  int nodes = 0;
  std::vector<std::string> stats = {"edges"};
  std::vector<double> targets;
  std::vector<std::string> attrs;
  int phases = 3;
  double gain = 1.0;
  int steps = 200;
  int final_steps = 6000;
  int samples = 100;
  std::uint64_t seed = 0;
};

std::map<std::string, std::vector<std::pair<std::string, double>>> attr_map(
    const std::vector<std::string>& specs) {
  std::map<std::string, std::vector<std::pair<std::string, double>>> out;
  for (const auto& s : specs) {
    auto [name, dist] = parse_attr_spec(s);
    out[name] = std::move(dist);
  }
  return out;
}

int cmd_ergm_fit(const GlobalOpts& g, const ErgmOpts& opt) {
  std::vector<StatisticSpec> stats;
  for (const auto& s : opt.stats) stats.push_back(parse_statistic(s));
  ErgmFitOptions fo;
  fo.phases = opt.phases;
  fo.gain = opt.gain;
  fo.steps_per_phase = opt.steps;
  fo.final_phase_steps = opt.final_steps;
  fo.samples_per_phase = opt.samples;
  fo.rng_seed = opt.seed;
  ErgmFitResult res = fit_from_targets(stats, opt.targets, opt.nodes, attr_map(opt.attrs), fo);

  Meta meta;
  meta.command = "ergm-fit";
  meta.seed = opt.seed;
  meta.add("nodes", opt.nodes);
  for (std::size_t k = 0; k < stats.size(); ++k)
    meta.add("target." + stats[k].name(), opt.targets[k]);

  nlohmann::json doc;
  doc["n"] = opt.nodes;
  doc["statistics"] = nlohmann::json::array();
  for (const auto& s : stats) doc["statistics"].push_back(s.name());
  doc["theta"] = res.spec.theta;
  doc["targets"] = opt.targets;
  doc["achieved"] = res.achieved;
  doc["mc_se"] = res.mc_se;
  doc["converged"] = res.converged;
  doc["trajectory"] = res.trajectory;
  write_json_doc(g.output_dir, "ergm.json", std::move(doc), meta);

  for (std::size_t k = 0; k < stats.size(); ++k)
    std::cout << stats[k].name() << ": theta " << fmt(res.spec.theta[k]) << ", target "
              << fmt(opt.targets[k]) << ", achieved " << fmt(res.achieved[k]) << " (mc se "
              << fmt(res.mc_se[k]) << ")\n";
  std::cout << (res.converged ? "converged" : "NOT converged within 2 MC SE") << "\n";
  return 0;
}

struct PowerOpts {
  int nodes = 0;
  std::vector<std::string> stats = {"edges"};
  std::vector<double> theta;
  std::vector<double> targets;
  std::vector<std::string> attrs;
  std::vector<int> grid = {100, 250, 500, 1000};
  int n_seeds = 6;
  int coupons = 3;
  double acceptance = 0.5;
  std::string estimand;
  double truth = std::numeric_limits<double>::quiet_NaN();
  int replicates = 200;
  int bootstrap = 200;
  bool regenerate = false;
  std::uint64_t seed = 0;
};

int cmd_power(const GlobalOpts& g, const PowerOpts& opt) {
  std::vector<StatisticSpec> stats;
  for (const auto& s : opt.stats) stats.push_back(parse_statistic(s));
  ErgmSpec spec;
  spec.n = opt.nodes;
  spec.statistics = stats;
  spec.attr_dists = attr_map(opt.attrs);
  if (!opt.theta.empty()) {
    spec.theta = opt.theta;
    if (spec.theta.size() != stats.size())
      throw std::runtime_error("--theta length must match --stats");
  } else if (!opt.targets.empty()) {
    ErgmFitOptions fo;
    fo.rng_seed = substream_seed(opt.seed, 0xF1, 0);
    ErgmFitResult fitres = fit_from_targets(stats, opt.targets, opt.nodes, spec.attr_dists, fo);
    spec.theta = fitres.spec.theta;
    if (!fitres.converged)
      std::cerr << "warning: target calibration did not converge within 2 MC SE\n";
  } else {
    throw std::runtime_error("power needs --theta or --targets");
  }

  std::vector<RdsConfig> grid;
  for (int target : opt.grid) {
    RdsConfig cfg;
    cfg.n_seeds = opt.n_seeds;
    cfg.coupons_per_respondent = opt.coupons;
    cfg.acceptance_prob = opt.acceptance;
    cfg.target_sample = target;
    grid.push_back(cfg);
  }
  PowerOptions po;
  po.replicates = opt.replicates;
  po.rng_seed = opt.seed;
  po.threads = g.threads;
  po.bootstrap_B = opt.bootstrap;
  po.regenerate_population = opt.regenerate;
  std::vector<PowerRow> rows = power_analysis(spec, grid, opt.estimand, opt.truth, po);

  Meta meta;
  meta.command = "power";
  meta.seed = opt.seed;
  meta.add("nodes", opt.nodes);
  meta.add("estimand", opt.estimand);
  meta.add("replicates", opt.replicates);

  std::vector<std::vector<Cell>> table;
  for (const auto& r : rows) {
    table.push_back({Cell(r.target_sample), Cell(r.bias), Cell(r.rmse), Cell(r.ci_width),
                     Cell(r.coverage), Cell(r.shortfall_rate)});
    if (r.flagged)
      std::cerr << "warning: target_sample=" << r.target_sample
                << " flagged (shortfall rate " << fmt(r.shortfall_rate) << ")\n";
  }
  write_table(g.output_dir, "power", g.file_format(), meta,
              {"sample_size", "bias", "rmse", "ci_width", "coverage", "shortfall_rate"},
              table);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"peer-referral sampling and network estimation toolkit"};
  app.set_config("--config", "", "flat key=value config file with [subcommand] sections");
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--output-dir", g.output_dir, "directory for output files")
      ->envname("RDSNET_OUTPUT_DIR")
      ->capture_default_str();
  app.add_option("--format", g.format, "table output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads for bootstrap/replicates")
      ->capture_default_str();

  DataOpts data;
  auto add_data_opts = [&](CLI::App* cmd) {
    cmd->add_option("dataset", data.path, "survey dataset (.csv or .json)")->required();
    cmd->add_option("--top-code", data.top_code, "instrument cap for close-friend degree")
        ->capture_default_str();
    cmd->add_option("--orphan-policy", data.orphan_policy,
                    "unmatched recruiter coupons: reject or seed")
        ->check(CLI::IsMember({"reject", "seed"}))
        ->capture_default_str();
  };

  CLI::App* c_validate = app.add_subcommand("validate", "check a dataset, exit 1 on violations");
  add_data_opts(c_validate);

  EstimateOpts eo;
  CLI::App* c_estimate = app.add_subcommand("estimate", "RDS-II estimate tables");
  add_data_opts(c_estimate);
  c_estimate->add_option("--variables", eo.variables, "variables to estimate")
      ->delimiter(',')
      ->capture_default_str();
  c_estimate->add_option("--by", eo.by, "attribute for subgroup table");
  c_estimate->add_option("--weight-degree", eo.weight, "weighting degree variable")
      ->capture_default_str();
  c_estimate->add_option("--bootstrap", eo.bootstrap, "bootstrap replicates")
      ->capture_default_str();
  c_estimate->add_option("--seed", eo.seed, "RNG seed")->capture_default_str();

  FitOpts fo;
  CLI::App* c_fit = app.add_subcommand("fit", "count regression with family selection + stepwise");
  add_data_opts(c_fit);
  c_fit->add_option("--response", fo.response, "count response variable")->required();
  c_fit->add_option("--terms", fo.terms, "mean-component covariates")->delimiter(',');
  c_fit->add_option("--zero-terms", fo.zero_terms, "zero-component covariates")->delimiter(',');
  c_fit->add_option("--family", fo.family, "poisson|negbin|zip|zinb|auto")
      ->check(CLI::IsMember({"poisson", "negbin", "zip", "zinb", "auto"}))
      ->capture_default_str();
  c_fit->add_flag("--no-stepwise", fo.no_stepwise, "skip backward elimination");
  c_fit->add_option("--ref", fo.refs, "reference level override attr=level (repeatable)");
  c_fit->add_option("--starts", fo.starts, "optimizer restarts")->capture_default_str();
  c_fit->add_option("--max-iter", fo.max_iter, "optimizer iteration cap")->capture_default_str();
  c_fit->add_option("--tol", fo.tol, "gradient tolerance")->capture_default_str();
  c_fit->add_option("--seed", fo.seed, "RNG seed")->capture_default_str();

  TreesOpts to;
  CLI::App* c_trees = app.add_subcommand("trees", "referral-forest structure tables");
  add_data_opts(c_trees);
  c_trees->add_flag("--labeled", to.labeled, "attribute-labeled isomorphism census");
  c_trees->add_option("--label-attrs", to.label_attrs, "label attributes")
      ->delimiter(',')
      ->capture_default_str();

  MixingOpts mo;
  CLI::App* c_mixing = app.add_subcommand("mixing", "recruiter-recruitee mixing matrix");
  add_data_opts(c_mixing);
  c_mixing->add_option("--attribute", mo.attribute, "categorical attribute")->required();
  c_mixing->add_option("--drop", mo.drop, "levels to exclude")->delimiter(',');

  SimulateOpts so;
  CLI::App* c_sim = app.add_subcommand("simulate", "synthetic RDS over a random graph");
  c_sim->add_option("--nodes", so.nodes, "population size")->capture_default_str();
  c_sim->add_option("--mean-degree", so.mean_degree, "expected degree")->capture_default_str();
  c_sim->add_option("--attr", so.attrs, "node attribute name:level=p,... (repeatable)");
  c_sim->add_option("--n-seeds", so.n_seeds, "initial seeds")->capture_default_str();
  c_sim->add_option("--seed-selection", so.seed_selection, "uniform or degree")
      ->check(CLI::IsMember({"uniform", "degree"}))
      ->capture_default_str();
  c_sim->add_option("--coupons", so.coupons, "coupons per respondent")->capture_default_str();
  c_sim->add_option("--acceptance", so.acceptance, "coupon redemption probability")
      ->capture_default_str();
  c_sim->add_option("--target", so.target, "target sample size")->capture_default_str();
  c_sim->add_option("--max-waves", so.max_waves, "wave cap (-1 = none)")->capture_default_str();
  c_sim->add_option("--seed", so.seed, "RNG seed")->capture_default_str();

  ErgmOpts ergo;
  CLI::App* c_ergm = app.add_subcommand("ergm-fit", "calibrate ERGM theta to target statistics");
  c_ergm->add_option("--nodes", ergo.nodes, "node count")->required();
  c_ergm->add_option("--stats", ergo.stats, "statistics, e.g. edges,nodematch(gender)")
      ->delimiter(',')
      ->capture_default_str();
  c_ergm->add_option("--targets", ergo.targets, "target statistic values")
      ->delimiter(',')
      ->required();
  c_ergm->add_option("--attr", ergo.attrs, "node attribute name:level=p,... (repeatable)");
  c_ergm->add_option("--phases", ergo.phases, "stochastic-approximation phases")
      ->capture_default_str();
  c_ergm->add_option("--gain", ergo.gain, "initial gain")->capture_default_str();
  c_ergm->add_option("--steps", ergo.steps, "theta updates per phase")->capture_default_str();
  c_ergm->add_option("--final-steps", ergo.final_steps, "updates in the averaged last phase")
      ->capture_default_str();
  c_ergm->add_option("--samples", ergo.samples, "pilot/verification samples")
      ->capture_default_str();
  c_ergm->add_option("--seed", ergo.seed, "RNG seed")->capture_default_str();

  PowerOpts po;
  CLI::App* c_power = app.add_subcommand("power", "RDS design accuracy over an ERGM population");
  c_power->add_option("--nodes", po.nodes, "population size")->required();
  c_power->add_option("--stats", po.stats, "statistics")->delimiter(',')->capture_default_str();
  c_power->add_option("--theta", po.theta, "ERGM coefficients")->delimiter(',');
  c_power->add_option("--targets", po.targets, "target statistics (calibrated first)")
      ->delimiter(',');
  c_power->add_option("--attr", po.attrs, "node attribute name:level=p,... (repeatable)");
  c_power->add_option("--grid", po.grid, "target sample sizes")->delimiter(',')
      ->capture_default_str();
  c_power->add_option("--n-seeds", po.n_seeds, "seeds per replicate")->capture_default_str();
  c_power->add_option("--coupons", po.coupons, "coupons per respondent")->capture_default_str();
  c_power->add_option("--acceptance", po.acceptance, "redemption probability")
      ->capture_default_str();
  c_power->add_option("--estimand", po.estimand, "attr=level or degree")->required();
  c_power->add_option("--truth", po.truth, "true value (default: realized population value)");
  c_power->add_option("--replicates", po.replicates, "replicates per design")
      ->capture_default_str();
  c_power->add_option("--bootstrap", po.bootstrap, "bootstrap replicates per estimate")
      ->capture_default_str();
  c_power->add_flag("--regenerate", po.regenerate, "redraw the population each replicate");
  c_power->add_option("--seed", po.seed, "RNG seed")->capture_default_str();

  std::vector<const char*> argv;
  argv.push_back("rdsnet");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_validate)) return cmd_validate(data);
    if (app.got_subcommand(c_estimate)) return cmd_estimate(g, data, eo);
    if (app.got_subcommand(c_fit)) return cmd_fit(g, data, fo);
    if (app.got_subcommand(c_trees)) return cmd_trees(g, data, to);
    if (app.got_subcommand(c_mixing)) return cmd_mixing(g, data, mo);
    if (app.got_subcommand(c_sim)) return cmd_simulate(g, so);
    if (app.got_subcommand(c_ergm)) return cmd_ergm_fit(g, ergo);
    if (app.got_subcommand(c_power)) return cmd_power(g, po);
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;  // unreachable with require_subcommand(1)
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace rdsnet
