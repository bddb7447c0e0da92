#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include "arboreal/presets.hpp"

namespace arboreal::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order{"build-ladder", "check-ladder", "build-forest", "records",
                                              "simulate",     "verify",       "report"};
  return order;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
}

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("field '" + section + "': expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError("field '" + (section.empty() ? k : section + "." + k) + "': unknown key");
}

template <class T>
void read(const json& obj, const std::string& section, const char* key, T& target) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  std::string path = section.empty() ? key : section + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError("field '" + path + "': expected true or false");
    target = v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("field '" + path + "': expected a string");
    target = v.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError("field '" + path + "': expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError("field '" + path + "': expected a nonnegative integer");
    }
    target = v.get<T>();
  } else {
    if (!v.is_number()) throw ConfigError("field '" + path + "': expected a number");
    target = v.get<T>();
  }
}

std::vector<int> int_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("field '" + path + "': expected a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer())
      throw ConfigError("field '" + path + "[" + std::to_string(i) + "]': expected an integer");
    out.push_back(j[i].get<int>());
  }
  return out;
}

void require_positive(long v, const std::string& path) {
  if (v <= 0) throw ConfigError("field '" + path + "': must be positive");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  check_keys(j, "", {"name", "scale", "law", "alpha", "stages", "checks", "ladder", "forest", "records", "simulation",
                     "stabilizer"});
  ExperimentConfig c;
  read(j, "", "name", c.name);
  if (!j.contains("scale")) throw ConfigError("field 'scale': required");
  c.scale = j.at("scale");
  read(j, "", "law", c.law);
  read(j, "", "alpha", c.alpha);

  bool ladder = true, forest = true, records = true, walk = true;
  if (j.contains("checks")) {
    const json& ch = j.at("checks");
    check_keys(ch, "checks", {"ladder", "forest", "markov_oracle", "records", "walk", "stabilizer"});
    read(ch, "checks", "ladder", ladder);
    read(ch, "checks", "forest", forest);
    read(ch, "checks", "markov_oracle", c.markov_oracle);
    read(ch, "checks", "records", records);
    read(ch, "checks", "walk", walk);
    read(ch, "checks", "stabilizer", c.stabilizer);
  }
  if (j.contains("stages")) {
    const json& st = j.at("stages");
    if (!st.is_array()) throw ConfigError("field 'stages': expected a list of stage names");
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (!st[i].is_string()) throw ConfigError("field 'stages[" + std::to_string(i) + "]': expected a string");
      std::string s = st[i].get<std::string>();
      const auto& order = stage_order();
      if (std::find(order.begin(), order.end(), s) == order.end())
        throw ConfigError("field 'stages[" + std::to_string(i) + "]': unknown stage '" + s + "'");
      c.stages.push_back(s);
    }
  } else {
    c.stages.push_back("build-ladder");
    if (ladder) c.stages.push_back("check-ladder");
    if (forest) c.stages.push_back("build-forest");
    if (records) c.stages.push_back("records");
    if (walk) {
      c.stages.push_back("simulate");
      c.stages.push_back("verify");
    }
    c.stages.push_back("report");
  }

  if (j.contains("ladder")) {
    check_keys(j.at("ladder"), "ladder", {"radius"});
    read(j.at("ladder"), "ladder", "radius", c.ladder_radius);
  }
  if (j.contains("forest")) {
    check_keys(j.at("forest"), "forest", {"radius", "oracle_depth", "kappa"});
    read(j.at("forest"), "forest", "radius", c.forest_radius);
    read(j.at("forest"), "forest", "oracle_depth", c.oracle_depth);
    if (j.at("forest").contains("kappa"))
      for (int v : int_list(j.at("forest").at("kappa"), "forest.kappa")) c.kappa.push_back(v);
  }
  if (j.contains("records")) {
    const json& r = j.at("records");
    check_keys(r, "records", {"runs", "horizon", "max_j", "transitions", "max_i", "dichotomy_runs",
                              "dichotomy_horizon", "first_m", "mixed_runs"});
    read(r, "records", "runs", c.record_runs);
    read(r, "records", "horizon", c.record_horizon);
    read(r, "records", "max_j", c.record_max_j);
    read(r, "records", "transitions", c.record_transitions);
    read(r, "records", "max_i", c.record_max_i);
    read(r, "records", "dichotomy_runs", c.dichotomy_runs);
    read(r, "records", "dichotomy_horizon", c.dichotomy_horizon);
    read(r, "records", "first_m", c.dichotomy_first_m);
    read(r, "records", "mixed_runs", c.mixed_runs);
  }
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    check_keys(s, "simulation", {"length", "paths", "csv_paths", "seed", "min_epoch"});
    read(s, "simulation", "length", c.length);
    read(s, "simulation", "paths", c.paths);
    read(s, "simulation", "csv_paths", c.csv_paths);
    read(s, "simulation", "seed", c.seed);
    read(s, "simulation", "min_epoch", c.min_epoch);
  }
  if (j.contains("stabilizer")) {
    check_keys(j.at("stabilizer"), "stabilizer", {"window", "probe_radius"});
    read(j.at("stabilizer"), "stabilizer", "window", c.stabilizer_window);
    read(j.at("stabilizer"), "stabilizer", "probe_radius", c.probe_radius);
  }
  if (c.ladder_radius < 0) throw ConfigError("field 'ladder.radius': must be nonnegative");
  if (c.forest_radius < 0) throw ConfigError("field 'forest.radius': must be nonnegative");
  if (c.length < 0) throw ConfigError("field 'simulation.length': must be nonnegative");
  if (c.csv_paths < 0) throw ConfigError("field 'simulation.csv_paths': must be nonnegative");
  if (c.stabilizer_window < 1) throw ConfigError("field 'stabilizer.window': must be positive");
  require_positive(c.paths, "simulation.paths");
  require_positive(c.record_runs, "records.runs");
  require_positive(c.record_horizon, "records.horizon");
  require_positive(c.record_transitions, "records.transitions");
  require_positive(c.dichotomy_runs, "records.dichotomy_runs");
  require_positive(c.mixed_runs, "records.mixed_runs");
  // validate eagerly so errors name the field before any stage runs
  try {
    parse_law(c.law);
  } catch (const ConfigError& e) {
    throw ConfigError("field 'law': " + std::string(e.what()));
  }
  try {
    parse_alpha(c.alpha);
  } catch (const ConfigError& e) {
    throw ConfigError("field 'alpha': " + std::string(e.what()));
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.filename().string());
}

StepLaw parse_law(const std::string& spec) {
  auto parts = split(spec, ':');
  try {
    if (parts.size() == 2 && parts[0] == "power") return StepLaw::power(to_number(parts[1], "power exponent"));
    if (parts.size() == 2 && parts[0] == "geometric") return StepLaw::geometric(to_number(parts[1], "ratio"));
    if (parts.size() == 4 && parts[0] == "lazy") {
      double p0 = to_number(parts[1], "laziness");
      double param = to_number(parts[3], "tail parameter");
      if (parts[2] == "power") return StepLaw::lazy(p0, TailKind::power, param);
      if (parts[2] == "geometric") return StepLaw::lazy(p0, TailKind::geometric, param);
      throw ConfigError("lazy tail must be 'power' or 'geometric'");
    }
    if (parts.size() == 2 && parts[0] == "table") {
      std::vector<double> p;
      for (const auto& v : split(parts[1], ',')) p.push_back(to_number(v, "table entry"));
      return StepLaw::table(p);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("law '" + spec + "': " + e.what());
  }
  throw ConfigError("law '" + spec + "': expected power:s, geometric:q, lazy:p0:power|geometric:x or table:p0,p1,...");
}

AlphaSequence parse_alpha(const std::string& spec) {
  auto parts = split(spec, ':');
  if (parts.size() == 1 && parts[0] == "zero") return {};
  if (parts.size() == 2 && parts[0] == "constant")
    return {AlphaSequence::Kind::constant, to_number(parts[1], "alpha constant"), 0};
  if (parts.size() == 3 && parts[0] == "power")
    return {AlphaSequence::Kind::power, to_number(parts[1], "alpha constant"), to_number(parts[2], "alpha exponent")};
  throw ConfigError("alpha '" + spec + "': expected zero, constant:c or power:c:e");
}

namespace {

std::vector<std::vector<Element>> element_lists(const GroupModel& m, const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError("field '" + path + "': expected a list of element lists");
  std::vector<std::vector<Element>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) throw ConfigError("field '" + p + "': expected a list of elements");
    out.emplace_back();
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      std::string q = p + "[" + std::to_string(k) + "]";
      if (!j[i][k].is_string()) throw ConfigError("field '" + q + "': expected an element string");
      try {
        out.back().push_back(m.parse_element(j[i][k].get<std::string>()));
      } catch (const ParseError& e) {
        throw ConfigError("field '" + q + "': " + e.what());
      }
    }
  }
  return out;
}


HorizonPolicy policy_of(const json& spec) {
  std::string p = "closed";
  read(spec, "scale", "policy", p);
  if (p == "closed") return HorizonPolicy::closed;
  if (p == "open") return HorizonPolicy::open;
  throw ConfigError("field 'scale.policy': expected 'closed' or 'open'");
}

GroupModel group_of(const json& spec) {
  if (!spec.contains("group")) throw ConfigError("field 'scale.group': required");
  std::string g;
  read(spec, "scale", "group", g);
  try {
    return GroupModel::parse(g);
  } catch (const std::exception& e) {
    throw ConfigError("field 'scale.group': " + std::string(e.what()));
  }
}

}  // namespace

Scale resolve_scale(const json& spec, const fs::path& base, BuildLog* log) {
  if (!spec.is_object()) throw ConfigError("field 'scale': expected an object");
  if (spec.contains("recipe")) {
    check_keys(spec, "scale", {"recipe"});
    std::string name;
    read(spec, "scale", "recipe", name);
    LadderRecipe r = [&] {
      try {
        return ladder_recipe(name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("field 'scale.recipe': " + std::string(e.what()));
      }
    }();
    return build_recipe(r, log);
  }
  if (spec.contains("file")) {
    check_keys(spec, "scale", {"file"});
    std::string file;
    read(spec, "scale", "file", file);
    fs::path p = fs::path(file).is_absolute() ? fs::path(file) : base / file;
    std::ifstream in(p);
    if (!in) throw ConfigError("field 'scale.file': cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return parse_scale(ss.str());
    } catch (const std::exception& e) {
      throw ConfigError(p.filename().string() + ": " + e.what());
    }
  }
  GroupModel m = group_of(spec);
  if (spec.contains("sigma")) {
    check_keys(spec, "scale", {"group", "lambda", "sigma", "filling", "policy"});
    if (!spec.contains("lambda") || !spec.contains("filling"))
      throw ConfigError("field 'scale': explicit scales need lambda, sigma and filling");
    try {
      return make_scale(m, int_list(spec.at("lambda"), "scale.lambda"), element_lists(m, spec.at("sigma"), "scale.sigma"),
                        element_lists(m, spec.at("filling"), "scale.filling"), policy_of(spec));
    } catch (const ScaleError& e) {
      throw ConfigError("field 'scale': " + std::string(e.what()));
    }
  }
  check_keys(spec, "scale", {"group", "lambda", "filling", "levels", "policy", "ball_budget", "search_budget"});
  if (!spec.contains("lambda") || !spec.contains("filling") || !spec.contains("levels"))
    throw ConfigError("field 'scale': builder scales need group, lambda, filling and levels");
  int levels = 0;
  read(spec, "scale", "levels", levels);
  BuildOptions opts;
  read(spec, "scale", "ball_budget", opts.ball_budget);
  read(spec, "scale", "search_budget", opts.search_budget);
  opts.policy = policy_of(spec);
  try {
    return build_ladder(m, int_list(spec.at("lambda"), "scale.lambda"), element_lists(m, spec.at("filling"), "scale.filling"),
                        levels, opts, log);
  } catch (const ScaleError& e) {
    throw ConfigError("field 'scale': " + std::string(e.what()));
  }
}

ojson ladder_report_json(const GroupModel& model, const LadderReport& r) {
  ojson j;
  j["ball_radius"] = r.ball_radius;
  j["ball_size"] = r.ball_size;
  j["spiked"] = r.spiked;
  j["unspiked"] = r.unspiked;
  j["ambiguous"] = r.ambiguous.size();
  j["height_violations"] = r.height_violations.size();
  auto& examples = j["ambiguous_examples"] = ojson::array();
  for (std::size_t i = 0; i < r.ambiguous.size() && i < 5; ++i) {
    ojson e;
    e["element"] = model.format(r.ambiguous[i].first);
    auto& ds = e["decompositions"] = ojson::array();
    for (const auto& d : r.ambiguous[i].second)
      ds.push_back(model.format(d.prefix) + " | " + model.format(d.spike) + " | " + model.format(d.postfix));
    examples.push_back(e);
  }
  auto& levels = j["levels"] = ojson::array();
  for (const auto& lc : r.levels) {
    ojson l;
    l["n"] = lc.n;
    l["lambda"] = lc.lambda;
    l["z_size"] = lc.z_size;
    l["escape"] = lc.escape;
    l["escape_radius"] = lc.escape_radius;
    l["switching"] = lc.switching;
    l["switching_by_products"] = lc.switching_by_products;
    levels.push_back(l);
  }
  j["direct_axioms_hold"] = r.direct_axioms_hold();
  j["sufficient_condition_holds"] = r.levels_checked && r.sufficient_condition_holds();
  j["escape_condition_holds"] = r.levels_checked && r.escape_condition_holds();
  return j;
}

ojson forest_check_json(const ForestCheck& c) {
  ojson j;
  j["acyclic"] = c.acyclic;
  j["height_violations"] = c.height_violations;
  j["two_lower_neighbours"] = c.two_lower_neighbours;
  j["components"] = c.components;
  j["closed_components"] = c.closed_components;
  j["closed_without_unique_root"] = c.closed_without_unique_root;
  j["open_with_many_roots"] = c.open_with_many_roots;
  j["holds"] = c.holds();
  return j;
}

namespace {

/// Shared state while a run walks through its stages.
struct Run {
  const ExperimentConfig& config;
  fs::path out;
  fs::path base;
  std::set<std::string> requested;
  std::map<std::string, std::string> status;  // ok, failed, error, skipped
  std::map<std::string, std::string> notes;
  RunResult result;

  std::optional<Scale> scale;
  BuildLog build_log;
  std::optional<Classifier> classifier;
  std::optional<WalkBatchSummary> walk;
  std::optional<Constraint> psi;

  void write(const std::string& name, const std::string& text) {
    fs::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    result.artifacts.push_back(name);
  }
  void write_json(const std::string& name, const ojson& j) { write(name, j.dump(2) + "\n"); }
  void fail(const std::string& stage, const std::string& what) {
    status[stage] = "failed";
    result.failures.push_back(stage + ": " + what);
  }
  bool blocked(const std::string& stage, std::initializer_list<const char*> deps) {
    for (const char* d : deps) {
      auto it = status.find(d);
      if (it != status.end() && it->second != "ok") {
        status[stage] = "skipped";
        notes[stage] = std::string(d) + " did not succeed";
        return true;
      }
    }
    return false;
  }
  const Scale& ensure_scale() {
    if (!scale) scale = resolve_scale(config.scale, base, &build_log);
    return *scale;
  }
  const Classifier& ensure_classifier() {
    if (!classifier) classifier.emplace(ensure_scale());
    return *classifier;
  }
};

void stage_build_ladder(Run& run) {
  const Scale& s = run.ensure_scale();
  run.write("scale.txt", serialize_scale(s));
  ojson j;
  j["group"] = s.model.name();
  j["horizon"] = s.horizon();
  auto& levels = j["levels"] = ojson::array();
  for (std::size_t i = 0; i < run.build_log.certificates.size(); ++i) {
    const auto& c = run.build_log.certificates[i];
    ojson l;
    l["level"] = i + 1;
    l["sigma"] = s.model.format(c.sigma);
    l["word_length"] = c.word_length;
    l["candidates_examined"] = c.candidates_examined;
    l["candidates_rejected"] = c.candidates_rejected;
    l["z_size"] = c.z_size;
    levels.push_back(l);
  }
  run.write_json("build_log.json", j);
  run.status["build-ladder"] = "ok";
}

void stage_check_ladder(Run& run) {
  const Scale& s = run.ensure_scale();
  auto report = check_ladder(s, run.config.ladder_radius);
  run.write_json("ladder.json", ladder_report_json(s.model, report));
  run.status["check-ladder"] = "ok";
  if (!report.direct_axioms_hold())
    run.fail("check-ladder", std::to_string(report.ambiguous.size()) + " ambiguous elements, " +
                                 std::to_string(report.height_violations.size()) + " height violations");
}

void stage_build_forest(Run& run) {
  const Classifier& c = run.ensure_classifier();
  const Scale& s = c.scale();
  Forest f = build_forest(c, run.config.forest_radius);
  ForestCheck chk = check_forest(f);
  ojson j;
  j["radius"] = f.radius;
  j["vertices"] = f.size();
  j["edges"] = f.edge_count();
  j["roots"] = f.roots.size();
  j["check"] = forest_check_json(chk);
  run.status["build-forest"] = "ok";
  if (!chk.holds()) run.fail("build-forest", "forest axioms violated");

  ojson markov;
  bool fast = s.lambda.size() >= 2 && fast_growth_check(s.lambda);
  if (!run.config.markov_oracle) {
    markov["status"] = "disabled";
  } else if (!fast) {
    markov["status"] = "skipped";
    markov["reason"] = "gauge is not fast-growth";
  } else {
    markov["status"] = "run";
    FiniteSet domain = gauge_root_domain(c);
    auto& depths = markov["depths"] = ojson::array();
    long total_diff = 0;
    for (int d = 0; d <= run.config.oracle_depth; ++d) {
      std::set<std::vector<Element>> gen, frs;
      auto keep = [&](const Ray& r) {
        if (!domain.contains(r.vertices.front())) return false;
        for (const auto& v : r.vertices)
          if (f.index_of(v) < 0) return false;
        return true;
      };
      for (const auto& r : generate_rays(c, d, domain))
        if (keep(r)) gen.insert(r.vertices);
      for (const auto& r : forest_paths(f, d))
        if (keep(r)) frs.insert(r.vertices);
      std::vector<std::vector<Element>> diff;
      std::set_symmetric_difference(gen.begin(), gen.end(), frs.begin(), frs.end(), std::back_inserter(diff));
      ojson row;
      row["depth"] = d;
      row["generated"] = gen.size();
      row["forest"] = frs.size();
      row["symmetric_difference"] = diff.size();
      depths.push_back(row);
      total_diff += static_cast<long>(diff.size());
    }
    markov["symmetric_difference"] = total_diff;
    if (total_diff) run.fail("build-forest", "Markov ray oracle differs from forest paths");
  }
  j["markov_oracle"] = markov;
  run.write_json("forest_check.json", j);
  run.write("forest.json", export_json(s.model, f) + "\n");
  run.write("forest.dot", export_dot(s.model, f));
  if (!run.config.kappa.empty()) {
    Forest cf = constrained_forest(f, run.config.kappa);
    run.write("forest_constrained.json", export_json(s.model, cf) + "\n");
    run.write("forest_constrained.dot", export_dot(s.model, cf));
  }
}

ojson records_json(const ExperimentConfig& cfg, const StepLaw& law, const AlphaSequence& alpha, bool& vervaat_ok) {
  ojson j;
  j["law"] = law.describe();
  auto simp = simplicity_criterion(law);
  j["simplicity"] = {{"verdict", to_string(simp.verdict)}, {"partial_sum", simp.partial_sum},
                     {"evaluated_to", simp.evaluated_to}, {"reason", simp.reason}};
  double worst = 0;
  for (long i = 0; i <= 30; ++i) {
    double row = 0;
    for (long k = i; k <= i + 200; ++k) row += vervaat_transition(law, i, k);
    worst = std::max(worst, std::abs(row + vervaat_row_remainder(law, i, i + 200) - 1.0));
  }
  vervaat_ok = worst <= 1e-12;
  j["vervaat_max_row_error"] = worst;

  auto occ = occupation_law_check(law, cfg.record_runs, cfg.record_horizon, cfg.record_max_j, cfg.seed);
  auto& rows = j["occupation"]["rows"] = ojson::array();
  long within = 0, compared = 0;
  for (const auto& r : occ.rows) {
    bool ok = r.excluded || std::abs(r.empirical - r.rho_sq) <= 3 * r.stderr_;
    if (!r.excluded) {
      ++compared;
      within += ok;
    }
    rows.push_back({{"j", r.j}, {"rho_sq", r.rho_sq}, {"empirical", r.empirical}, {"stderr", r.stderr_},
                    {"excluded", r.excluded}, {"within_3se", ok}});
  }
  j["occupation"]["runs"] = occ.runs;
  j["occupation"]["censored"] = occ.censored;
  j["occupation"]["within_3se"] = within;
  j["occupation"]["compared"] = compared;

  auto chain = record_chain_check(law, cfg.record_transitions, cfg.record_horizon, cfg.record_max_i, cfg.record_max_j,
                                  cfg.seed);
  long cells = 0, cells_ok = 0;
  double worst_z = 0;
  for (const auto& cell : chain.cells) {
    if (cell.from_total * cell.model < 5 || cell.stderr_ <= 0) continue;
    ++cells;
    double z = std::abs(cell.empirical - cell.model) / cell.stderr_;
    worst_z = std::max(worst_z, z);
    cells_ok += z <= 3;
  }
  j["record_chain"] = {{"transitions", chain.transitions}, {"cells", cells}, {"within_3se", cells_ok},
                       {"max_abs_z", worst_z}};

  auto dich = simplicity_dichotomy(law, cfg.dichotomy_runs, cfg.dichotomy_horizon, cfg.dichotomy_first_m, cfg.seed);
  j["dichotomy"] = {{"runs", dich.runs}, {"first_m", cfg.dichotomy_first_m}, {"fraction_all", dich.fraction_all()},
                    {"fraction_some", dich.fraction_some()}};
  try {
    auto env = build_envelopes(law, 1L << 60, 10);
    j["envelopes"] = {{"Phi", env.Phi}, {"Psi", env.Psi}};
  } catch (const std::exception& e) {
    j["envelopes"] = {{"error", e.what()}};
  }
  auto mixed = mixed_population_check(law, alpha, cfg.mixed_runs, cfg.dichotomy_horizon, cfg.seed);
  j["mixed_population"] = {{"alpha", alpha.describe()},
                           {"mean_bad_epochs", mixed.mean_bad_epochs},
                           {"mean_expected_bad", mixed.mean_expected_bad},
                           {"mean_last_bad", mixed.mean_last_bad},
                           {"max_last_bad", mixed.max_last_bad},
                           {"warnings", mixed.warnings}};
  return j;
}

void stage_records(Run& run) {
  StepLaw law = parse_law(run.config.law);
  bool ok = true;
  run.write_json("records.json", records_json(run.config, law, parse_alpha(run.config.alpha), ok));
  run.status["records"] = "ok";
  if (!ok) run.fail("records", "Vervaat rows do not sum to 1 within 1e-12");
}

void stage_simulate(Run& run, bool write_csv) {
  const Classifier& c = run.ensure_classifier();
  const Scale& s = c.scale();
  StepLaw law = parse_law(run.config.law);
  std::optional<StepDistribution> dist;
  try {
    dist.emplace(build_step_distribution(s, law, parse_alpha(run.config.alpha)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("field 'law': " + std::string(e.what()));
  }
  run.psi = psi_constraint(law, s.horizon());
  WalkBatchOptions o;
  o.paths = run.config.paths;
  o.length = run.config.length;
  o.seed = run.config.seed;
  o.min_epoch = run.config.min_epoch;
  o.keep_trunks = true;
  run.walk = run_walk_batch(*dist, c, *run.psi, s.model.identity(), o);

  if (write_csv) {
    std::ostringstream csv;
    csv << "path,epoch,time,value,simple,sigma_valued,prefix_in_gauge,tail_in_gauge,premises,positions_checked,"
           "exceptions\n";
    for (long i = 0; i < std::min(run.config.csv_paths, run.config.paths); ++i) {
      auto t = sample_path(*dist, s, o.length, s.model.identity(), derive_seed(o.seed, o.stream, static_cast<std::uint64_t>(i)));
      for (const auto& e : verify_spike_structure(t, c).epochs)
        csv << i << ',' << e.k << ',' << e.time << ',' << e.value << ',' << e.simple << ',' << e.sigma_valued << ','
            << e.prefix_in_gauge << ',' << e.tail_in_gauge << ',' << e.premises() << ',' << e.positions_checked << ','
            << e.exceptions << '\n';
    }
    run.write("walk_epochs.csv", csv.str());
    ojson dj;
    dj["support"] = dist->support.size();
    dj["entropy"] = dist->entropy;
    dj["level_mass"] = dist->level_mass;
    dj["symmetric"] = dist->symmetric;
    dj["warnings"] = dist->warnings;
    run.write_json("step_distribution.json", dj);
  }
  run.status["simulate"] = "ok";
}

void stage_verify(Run& run) {
  const Classifier& c = run.ensure_classifier();
  const Scale& s = c.scale();
  const WalkBatchSummary& w = *run.walk;
  ojson j;
  j["paths"] = w.paths;
  j["length"] = run.config.length;
  j["premise_epochs"] = w.premise_epochs;
  j["positions_checked"] = w.positions_checked;
  j["spike_exceptions"] = w.spike_exceptions;
  j["exception_details"] = w.exception_details;
  j["horizon_errors"] = w.horizon_errors;
  j["conclusive"] = w.conclusive;
  j["inconclusive"] = w.inconclusive;
  j["chain_checks"] = w.chain_checks;
  j["chain_exceptions"] = w.chain_exceptions;
  j["not_visited"] = w.not_visited;
  j["psi"] = *run.psi;
  j["psi_violations"] = w.psi_violations;
  j["mean_psi_violations"] = w.mean_psi_violations();
  j["constrained_edges_checked"] = w.edges_checked;
  j["constrained_edges_missing"] = w.edges_missing;
  j["margins_checked"] = w.margins_checked;
  j["negative_margins"] = w.negative_margins;
  j["eps_epochs"] = w.eps_epochs;
  j["eps_bad"] = w.eps_bad;
  ojson depths = ojson::object();
  for (const auto& [d, n] : w.ray_depths) depths[std::to_string(d)] = n;
  j["ray_depths"] = depths;

  std::vector<Ray> rays;
  for (const auto& t : w.trunks)
    if (t.status == TrunkStatus::conclusive) rays.push_back(t.full_ray);
  auto h0 = hitting_statistics(w.trunks, 0);
  j["hitting_depth0_cylinders"] = h0.counts.size();

  run.status["verify"] = "ok";
  if (w.spike_exceptions) run.fail("verify", std::to_string(w.spike_exceptions) + " spike-structure exceptions");
  if (w.chain_exceptions) run.fail("verify", std::to_string(w.chain_exceptions) + " trunk-chain exceptions");
  if (w.not_visited) run.fail("verify", "walk-ray vertex not visited by its path");
  if (w.edges_missing) run.fail("verify", "non-violating ray edge missing from the constrained forest");
  if (w.negative_margins) run.fail("verify", "negative sharp-boundary margin on a walk ray");

  ojson st;
  if (run.config.stabilizer) {
    std::vector<Element> probes;
    for (const auto& g : ball(s.model, s.delta(s.horizon() + 1), run.config.probe_radius).elements)
      if (!s.model.is_identity(g)) probes.push_back(g);
    auto rep = stabilizer_probe(s.model, rays, probes, run.config.stabilizer_window);
    st["status"] = "run";
    st["window"] = run.config.stabilizer_window;
    st["rays"] = rep.rays;
    st["probed"] = rep.probed();
    st["shallow"] = rep.shallow_rays;
    st["probes"] = rep.probes;
    st["hits"] = rep.hits.size();
    st["control_hits"] = rep.control_hits;
    if (!rep.hits.empty()) run.fail("verify", std::to_string(rep.hits.size()) + " stabilizer hits");
    if (rep.control_hits != rep.probed()) run.fail("verify", "stabilizer positive control missed");
  } else {
    st["status"] = "disabled";
  }
  j["stabilizer"] = st;
  run.write_json("walk.json", j);
}

ojson load_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing");
  return ojson::parse(in);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const fs::path& out, const fs::path& base) {
  Run run{config, out, base, {config.stages.begin(), config.stages.end()}, {}, {}, {}, {}, {}, {}, {}, {}};
  if (run.requested.empty()) return run.result;
  auto wanted = [&](const std::string& s) { return run.requested.count(s) != 0; };

  auto guarded = [&](const std::string& stage, auto&& body) {
    try {
      body();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      run.status[stage] = "error";
      run.notes[stage] = e.what();
      run.result.failures.push_back(stage + ": " + e.what());
    }
  };

  bool scale_needed = wanted("build-ladder") || wanted("check-ladder") || wanted("build-forest") ||
                      wanted("simulate") || wanted("verify");
  if (scale_needed) {
    if (wanted("build-ladder")) guarded("build-ladder", [&] { stage_build_ladder(run); });
    else guarded("build-ladder", [&] { run.ensure_scale(); });
  }
  if (wanted("check-ladder") && !run.blocked("check-ladder", {"build-ladder"}))
    guarded("check-ladder", [&] { stage_check_ladder(run); });
  if (wanted("build-forest") && !run.blocked("build-forest", {"build-ladder", "check-ladder"}))
    guarded("build-forest", [&] { stage_build_forest(run); });
  if (wanted("records")) guarded("records", [&] { stage_records(run); });
  bool walk = wanted("simulate") || wanted("verify");
  if (walk && !run.blocked("simulate", {"build-ladder", "check-ladder", "records"}))
    guarded("simulate", [&] { stage_simulate(run, wanted("simulate")); });
  if (wanted("verify") && !run.blocked("verify", {"simulate"})) guarded("verify", [&] { stage_verify(run); });
  if (!wanted("simulate")) run.status.erase("simulate");
  if (!wanted("build-ladder")) run.status.erase("build-ladder");

  ojson manifest;
  manifest["name"] = config.name;
  manifest["seed"] = config.seed;
  manifest["law"] = config.law;
  manifest["alpha"] = config.alpha;
  if (run.scale) {
    manifest["group"] = run.scale->model.name();
    manifest["horizon"] = run.scale->horizon();
  }
  auto& stages = manifest["stages"] = ojson::array();
  for (const auto& s : stage_order()) {
    if (s == "report" || !run.status.count(s)) continue;
    ojson e;
    e["stage"] = s;
    e["status"] = run.status[s];
    if (run.notes.count(s)) e["note"] = run.notes[s];
    stages.push_back(e);
  }
  manifest["failures"] = run.result.failures;
  run.write_json("manifest.json", manifest);

  if (wanted("report")) {
    run.result.summary = render_report(out);
    run.write("summary.txt", run.result.summary);
  }
  if (!run.result.failures.empty()) run.result.exit_code = kInvariantFailure;
  return run.result;
}

std::string render_report(const fs::path& bundle) {
  ojson manifest;
  try {
    manifest = load_json(bundle / "manifest.json");
  } catch (const std::exception&) {
    throw ConfigError("report: missing artifact manifest.json (no pipeline run in " + bundle.string() + ")");
  }
  static const std::map<std::string, std::string> artifact{{"build-ladder", "build_log.json"},
                                                           {"check-ladder", "ladder.json"},
                                                           {"build-forest", "forest_check.json"},
                                                           {"records", "records.json"},
                                                           {"simulate", "step_distribution.json"},
                                                           {"verify", "walk.json"}};
  std::ostringstream os;
  os << "arboreal report: " << manifest.value("name", std::string("experiment")) << "\n";
  if (manifest.contains("group"))
    os << "group " << manifest["group"].get<std::string>() << ", horizon " << manifest["horizon"].get<int>() << ", ";
  os << "law " << manifest["law"].get<std::string>() << ", seed " << manifest["seed"].get<std::uint64_t>() << "\n\n";
  auto line = [&](const std::string& name, const std::string& verdict, const std::string& detail) {
    os << std::left << std::setw(16) << name << std::setw(14) << verdict << detail << "\n";
  };
  auto pass = [](bool ok) { return std::string(ok ? "PASS" : "FAIL"); };
  for (const auto& e : manifest["stages"]) {
    std::string stage = e["stage"].get<std::string>(), status = e["status"].get<std::string>();
    if (status == "skipped" || status == "error") {
      line(stage, status == "skipped" ? "SKIPPED" : "ERROR", e.value("note", std::string()));
      continue;
    }
    ojson a;
    try {
      a = load_json(bundle / artifact.at(stage));
    } catch (const std::exception&) {
      throw ConfigError("report: stage " + stage + " has no artifact " + artifact.at(stage));
    }
    std::ostringstream d;
    if (stage == "build-ladder") {
      d << a["levels"].size() << " levels built";
      line(stage, "DONE", d.str());
    } else if (stage == "check-ladder") {
      d << "ball " << a["ball_radius"] << ": " << a["ball_size"] << " elements, " << a["ambiguous"] << " ambiguous, "
        << a["height_violations"] << " height violations; 5-lambda switching "
        << (a["sufficient_condition_holds"].get<bool>() ? "holds" : "not certified");
      line(stage, pass(a["direct_axioms_hold"].get<bool>()), d.str());
    } else if (stage == "build-forest") {
      d << a["vertices"] << " vertices, " << a["edges"] << " edges, " << a["check"]["components"] << " components";
      line(stage, pass(a["check"]["holds"].get<bool>()), d.str());
      const auto& mk = a["markov_oracle"];
      if (mk["status"] == "run") {
        std::ostringstream m;
        m << "depth <= " << mk["depths"].size() - 1 << ": symmetric difference " << mk["symmetric_difference"];
        line("markov-oracle", pass(mk["symmetric_difference"].get<long>() == 0), m.str());
      } else {
        line("markov-oracle", "SKIPPED", mk.value("reason", std::string("disabled")));
      }
    } else if (stage == "records") {
      d << "simplicity " << a["simplicity"]["verdict"].get<std::string>() << "; vervaat row error "
        << a["vervaat_max_row_error"].get<double>();
      line(stage, pass(a["vervaat_max_row_error"].get<double>() <= 1e-12), d.str());
      std::ostringstream o;
      o << a["occupation"]["within_3se"] << "/" << a["occupation"]["compared"] << " occupation rows ("
        << a["occupation"]["censored"] << "/" << a["occupation"]["runs"] << " runs censored), "
        << a["record_chain"]["within_3se"] << "/" << a["record_chain"]["cells"] << " chain cells within 3 SE";
      line("records-stats", "MEASURED", o.str());
    } else if (stage == "simulate") {
      d << a["support"] << " support points, entropy " << a["entropy"].get<double>();
      line(stage, "DONE", d.str());
    } else if (stage == "verify") {
      d << a["positions_checked"] << " positions over " << a["premise_epochs"] << " premise epochs, "
        << a["spike_exceptions"] << " exceptions";
      line("walk-spikes", pass(a["spike_exceptions"].get<long>() == 0), d.str());
      std::ostringstream t;
      t << a["chain_exceptions"] << " chain exceptions; conclusive " << a["conclusive"] << ", INCONCLUSIVE "
        << a["inconclusive"];
      line("walk-trunk", pass(a["chain_exceptions"].get<long>() == 0 && a["not_visited"].get<long>() == 0), t.str());
      std::ostringstream c;
      c << "mean psi violations " << a["mean_psi_violations"].get<double>() << ", " << a["constrained_edges_missing"]
        << "/" << a["constrained_edges_checked"] << " edges missing";
      line("constrained", pass(a["constrained_edges_missing"].get<long>() == 0), c.str());
      std::ostringstream mg;
      mg << a["negative_margins"] << "/" << a["margins_checked"] << " negative";
      line("sharp-margins", pass(a["negative_margins"].get<long>() == 0), mg.str());
      const auto& st = a["stabilizer"];
      if (st["status"] == "run") {
        std::ostringstream sd;
        sd << st["probed"] << " rays probed (" << st["shallow"] << " too shallow), " << st["hits"] << " hits, control "
           << st["control_hits"] << "/" << st["probed"];
        bool ok = st["hits"].get<std::size_t>() == 0 && st["control_hits"] == st["probed"];
        line("stabilizer", st["probed"].get<std::size_t>() == 0 ? "VACUOUS" : pass(ok), sd.str());
      } else {
        line("stabilizer", "SKIPPED", "disabled");
      }
    }
  }
  os << "\nfailures: " << manifest["failures"].size() << "\n";
  for (const auto& f : manifest["failures"]) os << "  " << f.get<std::string>() << "\n";
  return os.str();
}

}  // namespace arboreal::cli
