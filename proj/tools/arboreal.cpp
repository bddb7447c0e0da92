#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "arboreal/presets.hpp"
#include "arboreal/switchers.hpp"
#include "experiment.hpp"

using namespace arboreal;
using namespace arboreal::cli;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "arboreal-out";
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required();
  app->add_option("--seed", c.seed, "master seed, overrides simulation.seed");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else {
    cfg.scale = {{"recipe", "f2"}};
  }
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

fs::path base_of(const Common& c) { return c.config.empty() ? fs::current_path() : fs::path(c.config).parent_path(); }

std::vector<std::string> prerequisites(const std::string& stage) {
  if (stage == "build-ladder") return {"build-ladder"};
  if (stage == "check-ladder") return {"build-ladder", "check-ladder"};
  if (stage == "build-forest") return {"build-ladder", "check-ladder", "build-forest"};
  if (stage == "records") return {"records"};
  if (stage == "simulate") return {"build-ladder", "check-ladder", "records", "simulate"};
  return {"build-ladder", "check-ladder", "records", "simulate", "verify"};
}

int finish(const RunResult& r, const fs::path& out) {
  if (!r.summary.empty()) std::cout << r.summary;
  for (const auto& f : r.failures) std::cerr << "invariant failure: " << f << "\n";
  std::cerr << r.artifacts.size() << " artifacts in " << out.string() << "\n";
  return r.exit_code;
}

std::vector<long> parse_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) throw ConfigError("--kappa: '" + item + "' is not an integer");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--kappa: empty list");
  return out;
}

int find_switcher(const std::string& group, int z_radius, const std::string& gens, std::size_t budget,
                  const std::string& out) {
  GroupModel m = GroupModel::parse(group);
  std::vector<Element> base = m.standard_generators();
  if (!gens.empty()) {
    base.clear();
    std::stringstream ss(gens);
    std::string tok;
    while (std::getline(ss, tok, ',')) base.push_back(m.parse_element(tok));
  }
  Ball z = ball(m, GeneratingSet::symmetrized(m, base), z_radius);
  SearchPolicy policy;
  policy.budget = budget;
  SearchCertificate cert = find_superswitcher(m, z, policy, true);
  // independent re-check of the returned element
  bool pair_ok = is_switching_set(m, {cert.sigma, m.inverse(cert.sigma)}, z).holds &&
                 is_switching_set_by_products(m, {cert.sigma, m.inverse(cert.sigma)}, z);
  std::ostringstream os;
  os << "group " << m.name() << ", |Z| = " << z.size() << " (radius " << z_radius << ")\n";
  os << "sigma " << m.format(cert.sigma) << " (word length " << cert.word_length << ")\n";
  os << "examined " << cert.candidates_examined << ", rejected " << cert.candidates_rejected << "\n";
  os << "pair switching check " << (pair_ok ? "holds" : "FAILS") << "\n";
  for (const auto& line : cert.log) os << line << "\n";
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream(out) << os.str();
    std::cout << m.format(cert.sigma) << "\n";
  }
  return pair_ok ? kOk : kInvariantFailure;
}

/// Forest DOT with one sampled path overlaid: pre-record positions circled, record positions greyed.
int export_dot_overlay(const Common& c, long path_index) {
  ExperimentConfig cfg = load(c);
  Scale s = resolve_scale(cfg.scale, base_of(c));
  Classifier cls(s);
  Forest f = build_forest(cls, cfg.forest_radius);
  StepLaw law = parse_law(cfg.law);
  StepDistribution dist = [&] {
    try {
      return build_step_distribution(s, law, parse_alpha(cfg.alpha));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("field 'law': " + std::string(e.what()));
    }
  }();
  auto trace = sample_path(dist, s, cfg.length, s.model.identity(),
                           derive_seed(cfg.seed, kStreamWalk, static_cast<std::uint64_t>(path_index)));
  auto spikes = verify_spike_structure(trace, cls);
  auto trunk = verify_trunk(trace, spikes, cls);
  FiniteSet before, at;
  for (long t : trace.records.times) {
    if (f.index_of(trace.y(t - 1)) >= 0) before.insert(trace.y(t - 1));
    if (f.index_of(trace.y(t)) >= 0) at.insert(trace.y(t));
  }
  DotOverlay overlay{before.elements, at.elements};
  fs::create_directories(c.out);
  fs::path file = fs::path(c.out) / "forest_trace.dot";
  std::ofstream(file) << export_dot(s.model, f, &overlay);
  std::cerr << "path " << path_index << ": " << (trunk.status == TrunkStatus::conclusive ? "conclusive" : "INCONCLUSIVE")
            << ", " << overlay.circled.size() << " pre-record positions in the ball, wrote " << file.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arboreal structures on ICC groups: ladders, despiking forests and walk verification"};
  app.require_subcommand(1);

  Common common;
  auto* run = app.add_subcommand("run", "run every stage enabled by the config");
  add_common(run, common, true);

  std::vector<std::pair<std::string, CLI::App*>> stages;
  for (const char* s : {"build-ladder", "check-ladder", "build-forest", "records", "simulate", "verify"}) {
    auto* sub = app.add_subcommand(s, std::string("run ") + s + " and its prerequisites");
    add_common(sub, common, std::string(s) != "records");
    stages.emplace_back(s, sub);
  }
  std::string kappa, law;
  stages[2].second->add_option("--kappa", kappa, "constraint table k(0),k(1),... for constrained_forest");
  stages[3].second->add_option("--law", law, "step law, e.g. power:3 or lazy:0.9998:power:3");

  std::string bundle;
  auto* report = app.add_subcommand("report", "summarize an artifact bundle");
  report->add_option("bundle", bundle, "bundle directory")->required();

  std::string group, gens, sw_out;
  int z_radius = 1;
  std::size_t budget = 2'000'000;
  auto* finder = app.add_subcommand("find-switcher", "shortest superswitcher for a word-metric ball");
  finder->add_option("--group", group, "F2, L2 or Z2*Z3")->required();
  finder->add_option("--z-radius", z_radius, "radius of Z")->capture_default_str();
  finder->add_option("--gens", gens, "comma-separated generators of Z's ball (default: standard)");
  finder->add_option("--budget", budget, "candidate budget")->capture_default_str();
  finder->add_option("--out", sw_out, "write the certificate here instead of stdout");

  long path_index = 0;
  auto* dot = app.add_subcommand("export-dot", "forest DOT with a sampled path overlaid");
  add_common(dot, common, true);
  dot->add_option("--path", path_index, "path index")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*report) {
      std::cout << render_report(bundle);
      return kOk;
    }
    if (*finder) return find_switcher(group, z_radius, gens, budget, sw_out);
    if (*dot) return export_dot_overlay(common, path_index);
    ExperimentConfig cfg = load(common);
    if (!*run) {
      for (const auto& [name, sub] : stages) {
        if (!*sub) continue;
        cfg.stages = prerequisites(name);
        cfg.stages.push_back("report");
      }
      if (!kappa.empty()) cfg.kappa = parse_list(kappa);
      if (!law.empty()) {
        parse_law(law);
        cfg.law = law;
      }
    }
    RunResult r = run_experiment(cfg, common.out, base_of(common));
    return finish(r, common.out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
