#include "arboreal/ladder.hpp"

#include <algorithm>
#include <sstream>

namespace arboreal {

namespace {

std::string set_name(bool spike, int n) { return (spike ? "Sigma_" : "A_") + std::to_string(n); }

bool is_symmetric(const GroupModel& model, const std::vector<Element>& set) {
  ElementSet s(set.begin(), set.end());
  for (const auto& g : set)
    if (!s.count(model.inverse(g))) return false;
  return true;
}

}  // namespace

int Scale::gauge(int n) const {
  if (n < 1 || n > static_cast<int>(lambda.size()))
    throw ScaleError("gauge value lambda(" + std::to_string(n) + ") is not tabulated");
  return lambda[static_cast<std::size_t>(n - 1)];
}

GeneratingSet Scale::delta(int n) const {
  if (n < 1 || n > horizon() + 1) throw ScaleError("Delta_" + std::to_string(n) + " is outside the horizon");
  std::vector<Element> elems;
  for (int i = 0; i < n; ++i) {
    if (i >= 1) elems.insert(elems.end(), sigma[static_cast<std::size_t>(i - 1)].begin(),
                             sigma[static_cast<std::size_t>(i - 1)].end());
    elems.insert(elems.end(), filling[static_cast<std::size_t>(i)].begin(), filling[static_cast<std::size_t>(i)].end());
  }
  return GeneratingSet::symmetrized(model, elems);
}

int Scale::level_of(const Element& g) const {
  auto it = level_index.find(g);
  return it == level_index.end() ? -1 : it->second / 2;
}

bool Scale::in_sigma(const Element& g, int n) const {
  auto it = level_index.find(g);
  return it != level_index.end() && it->second == 2 * n + 1;
}

Scale make_scale(const GroupModel& model, std::vector<int> lambda, std::vector<std::vector<Element>> sigma,
                 std::vector<std::vector<Element>> filling, HorizonPolicy policy) {
  const int n_levels = static_cast<int>(sigma.size());
  if (static_cast<int>(filling.size()) != n_levels + 1)
    throw ScaleError("expected " + std::to_string(n_levels + 1) + " filling sets A_0..A_N, got " +
                     std::to_string(filling.size()));
  if (static_cast<int>(lambda.size()) < n_levels)
    throw ScaleError("gauge table shorter than the horizon " + std::to_string(n_levels));
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < 0) throw ScaleError("gauge values must be nonnegative");
    if (i && lambda[i] < lambda[i - 1])
      throw ScaleError("gauge decreases at n = " + std::to_string(i + 1));
  }
  if (policy == HorizonPolicy::open && lambda.empty())
    throw ScaleError("an open horizon needs at least one gauge value");

  Scale s{model, std::move(lambda), std::move(sigma), std::move(filling), policy, 5, {}};
  auto register_set = [&](const std::vector<Element>& set, bool spike, int n) {
    for (const auto& g : set) {
      model.format(g);  // validates the tag
      if (spike && model.is_identity(g)) throw ScaleError(set_name(spike, n) + " contains the identity");
      auto [it, fresh] = s.level_index.emplace(g, 2 * n + (spike ? 1 : 0));
      if (!fresh) {
        int other = it->second;
        throw ScaleError("overlap: " + model.format(g) + " lies in " + set_name(other % 2 == 1, other / 2) +
                         " and " + set_name(spike, n));
      }
    }
    if (!is_symmetric(model, set)) throw ScaleError(set_name(spike, n) + " is not symmetric");
  };
  if (std::find(s.filling[0].begin(), s.filling[0].end(), model.identity()) == s.filling[0].end())
    throw ScaleError("A_0 must contain the identity");
  for (int n = 0; n <= n_levels; ++n) {
    if (n >= 1) {
      if (s.sigma[static_cast<std::size_t>(n - 1)].empty()) throw ScaleError(set_name(true, n) + " is empty");
      register_set(s.sigma[static_cast<std::size_t>(n - 1)], true, n);
    }
    register_set(s.filling[static_cast<std::size_t>(n)], false, n);
  }
  return s;
}

Classifier::Classifier(const Scale& scale, std::size_t budget) : scale_(scale), budget_(budget) {
  const int n_levels = scale_.horizon();
  for (int n = 1; n <= n_levels; ++n) {
    gauge_balls_.push_back(ball(scale_.model, scale_.delta(n), scale_.gauge(n), budget_));
    std::vector<Element> inv;
    for (const auto& s : scale_.sigma[static_cast<std::size_t>(n - 1)]) inv.push_back(scale_.model.inverse(s));
    sigma_inverse_.push_back(std::move(inv));
  }
  if (scale_.policy == HorizonPolicy::open) {
    top_delta_ = scale_.delta(n_levels + 1);
    const int ref = static_cast<int>(scale_.lambda.size()) > n_levels ? scale_.lambda[static_cast<std::size_t>(n_levels)]
                                                                    : scale_.lambda.back();
    horizon_cutoff_ = (scale_.escape_multiple - 2) * ref;
  }
}

void Classifier::check_horizon(const Element& g) const {
  if (scale_.policy != HorizonPolicy::open) return;
  if (!bounded_length(scale_.model, g, top_delta_, horizon_cutoff_, budget_))
    throw HorizonError("horizon unsound for " + scale_.model.format(g) + ": |g|_" +
                       std::to_string(scale_.horizon() + 1) + " exceeds " + std::to_string(horizon_cutoff_) +
                       ", so a spike above level " + std::to_string(scale_.horizon()) + " cannot be excluded");
}

std::vector<SpikeDecomposition> Classifier::spike_decompositions(const Element& g) const {
  check_horizon(g);
  const GroupModel& m = scale_.model;
  std::vector<SpikeDecomposition> out;
  for (int n = 1; n <= scale_.horizon(); ++n) {
    const Ball& b = gauge_balls_[static_cast<std::size_t>(n - 1)];
    const auto& sig = scale_.sigma[static_cast<std::size_t>(n - 1)];
    const auto& sig_inv = sigma_inverse_[static_cast<std::size_t>(n - 1)];
    for (const auto& p : b.elements) {
      Element rest = m.multiply(m.inverse(p), g);
      for (std::size_t i = 0; i < sig.size(); ++i) {
        Element q = m.multiply(sig_inv[i], rest);
        if (b.contains(q)) out.push_back({p, sig[i], std::move(q), n});
      }
    }
  }
  return out;
}

Classification Classifier::classify(const Element& g) const {
  Classification c;
  c.decompositions = spike_decompositions(g);
  c.kind = c.decompositions.empty() ? ClassKind::unspiked
           : c.decompositions.size() == 1 ? ClassKind::spiked
                                          : ClassKind::ambiguous;
  return c;
}

bool Classifier::within_gauge(const Element& h, int n) const {
  return gauge_balls_[static_cast<std::size_t>(n - 1)].contains(h);
}

ElementMap<std::vector<SpikeDecomposition>> brute_force_decompositions(const Scale& scale, std::size_t budget) {
  const GroupModel& m = scale.model;
  ElementMap<std::vector<SpikeDecomposition>> out;
  for (int n = 1; n <= scale.horizon(); ++n) {
    Ball b = ball(m, scale.delta(n), scale.gauge(n), budget);
    for (const auto& p : b.elements)
      for (const auto& s : scale.sigma[static_cast<std::size_t>(n - 1)]) {
        Element ps = m.multiply(p, s);
        for (const auto& q : b.elements) out[m.multiply(ps, q)].push_back({p, s, q, n});
      }
  }
  return out;
}

bool LadderReport::sufficient_condition_holds() const {
  if (!levels_checked) return false;
  return std::all_of(levels.begin(), levels.end(), [](const LevelCheck& l) { return l.switching; });
}

bool LadderReport::escape_condition_holds() const {
  if (!levels_checked) return false;
  return std::all_of(levels.begin(), levels.end(), [](const LevelCheck& l) { return l.escape; });
}

LadderReport check_ladder(const Scale& scale, int ball_radius, const CheckOptions& options) {
  LadderReport r;
  r.ball_radius = ball_radius;
  Classifier classifier(scale, options.budget);
  Ball test = ball(scale.model, scale.delta(scale.horizon() + 1), ball_radius, options.budget);
  r.ball_size = test.size();
  for (const auto& g : test.elements) {
    auto decs = classifier.spike_decompositions(g);
    if (decs.empty()) {
      ++r.unspiked;
      continue;
    }
    if (decs.size() > 1) {
      r.ambiguous.emplace_back(g, std::move(decs));
      continue;
    }
    ++r.spiked;
    const Element& parent = decs.front().prefix;
    Classification pc = classifier.classify(parent);
    if (pc.kind == ClassKind::ambiguous || pc.height() >= decs.front().height)
      r.height_violations.emplace_back(g, parent);
  }

  if (options.check_levels) {
    r.levels_checked = true;
    for (int n = 1; n <= scale.horizon(); ++n) {
      LevelCheck lc;
      lc.n = n;
      lc.lambda = scale.gauge(n);
      Ball z = ball(scale.model, scale.delta(n), 5 * lc.lambda, options.budget);
      lc.z_size = z.size();
      const auto& sig = scale.sigma[static_cast<std::size_t>(n - 1)];
      lc.escape_radius = 5 * lc.lambda;
      for (const auto& s : sig) {
        auto it = z.index.find(s);
        if (it == z.index.end()) continue;
        int d = z.distance[static_cast<std::size_t>(it->second)];
        lc.escape_radius = std::min(lc.escape_radius, d - 1);
        if (d <= 3 * lc.lambda) lc.escape = false;
      }
      SwitchResult sw = is_switching_set(scale.model, sig, z);
      lc.switching = sw.holds;
      lc.witness = sw.witness;
      lc.switching_by_products = is_switching_set_by_products(scale.model, sig, z);
      r.levels.push_back(std::move(lc));
    }
  }
  return r;
}

Scale build_ladder(const GroupModel& model, const std::vector<int>& lambda,
                   const std::vector<std::vector<Element>>& filling_in, int levels, const BuildOptions& options,
                   BuildLog* log) {
  if (levels < 0) throw ScaleError("number of levels must be nonnegative");
  if (filling_in.empty()) throw ScaleError("A_0 is required");
  if (static_cast<int>(filling_in.size()) > levels + 1)
    throw ScaleError("more filling sets than levels: A_" + std::to_string(filling_in.size() - 1) +
                     " given for horizon " + std::to_string(levels));
  std::vector<std::vector<Element>> filling = filling_in;
  filling.resize(static_cast<std::size_t>(levels) + 1);
  if (static_cast<int>(lambda.size()) < levels) throw ScaleError("gauge table shorter than the horizon");

  // Validates A_0 and λ before any search runs; overlaps among the A-sets are caught here too.
  (void)make_scale(model, lambda, {}, {filling[0]}, HorizonPolicy::closed);
  FiniteSet exclude;
  for (std::size_t n = 0; n < filling.size(); ++n)
    for (const auto& g : filling[n])
      if (!exclude.insert(g)) throw ScaleError("overlap: " + model.format(g) + " appears twice among the A-sets");

  std::vector<std::vector<Element>> sigma;
  for (int n = 1; n <= levels; ++n) {
    std::vector<std::vector<Element>> part_fill(filling.begin(), filling.begin() + n);
    part_fill.push_back({});
    Scale s{model, lambda, sigma, part_fill, HorizonPolicy::closed, 5, {}};
    GeneratingSet dn = s.delta(n);
    try {
      Ball z = ball(model, dn, 5 * s.gauge(n), options.ball_budget);
      std::vector<Element> order;
      for (const auto& g : dn.elements)
        if (!model.is_identity(g)) order.push_back(g);
      for (const auto& g : model.standard_generators()) order.push_back(g);
      SearchPolicy policy;
      policy.generators = GeneratingSet::symmetrized(model, order).elements;
      policy.budget = options.search_budget;
      policy.exclude = exclude;
      SearchCertificate cert = find_superswitcher(model, z, policy);
      Element inv = model.inverse(cert.sigma);
      std::vector<Element> level{cert.sigma};
      if (inv != cert.sigma) level.push_back(inv);
      for (const auto& g : level) exclude.insert(g);
      sigma.push_back(std::move(level));
      if (log) log->certificates.push_back(std::move(cert));
    } catch (const CapacityError& e) {
      throw CapacityError("building level " + std::to_string(n) + ": " + e.what());
    }
  }
  return make_scale(model, lambda, std::move(sigma), std::move(filling), options.policy);
}

bool fast_growth_check(const std::vector<int>& lambda) {
  if (lambda.size() < 2) throw std::invalid_argument("fast-growth check needs at least two gauge values");
  long long sum = 0;
  for (std::size_t n = 1; n < lambda.size(); ++n) {
    sum += lambda[n - 1];
    if (lambda[n] < static_cast<long long>(n) + 2 * sum) return false;
  }
  return true;
}

namespace {

std::string join_set(const GroupModel& m, const std::vector<Element>& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) out += (i ? " ; " : " ") + m.format(set[i]);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string serialize_scale(const Scale& scale) {
  const GroupModel& m = scale.model;
  std::ostringstream os;
  os << "arboreal-scale 1\n";
  os << "group " << m.name() << "\n";
  os << "policy " << (scale.policy == HorizonPolicy::open ? "open" : "closed") << "\n";
  os << "escape-multiple " << scale.escape_multiple << "\n";
  os << "horizon " << scale.horizon() << "\n";
  os << "gauge";
  for (int v : scale.lambda) os << " " << v;
  os << "\n";
  for (int n = 0; n <= scale.horizon(); ++n) {
    if (n >= 1) os << "spikes " << n << " :" << join_set(m, scale.sigma[static_cast<std::size_t>(n - 1)]) << "\n";
    os << "filling " << n << " :" << join_set(m, scale.filling[static_cast<std::size_t>(n)]) << "\n";
  }
  return os.str();
}

Scale parse_scale(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  std::optional<GroupModel> model;
  HorizonPolicy policy = HorizonPolicy::closed;
  int escape = 5;
  int horizon = -1;
  std::vector<int> lambda;
  std::vector<std::vector<Element>> sigma, filling;
  auto fail = [&](const std::string& why) -> ScaleError {
    return ScaleError("scale file line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "arboreal-scale") {
      int version = 0;
      ls >> version;
      if (version != 1) throw fail("unsupported version");
    } else if (key == "group") {
      std::string name;
      ls >> name;
      model = GroupModel::parse(name);
    } else if (key == "policy") {
      std::string p;
      ls >> p;
      if (p == "open") policy = HorizonPolicy::open;
      else if (p == "closed") policy = HorizonPolicy::closed;
      else throw fail("unknown policy '" + p + "'");
    } else if (key == "escape-multiple") {
      if (!(ls >> escape) || escape < 3) throw fail("escape multiple must be an integer >= 3");
    } else if (key == "horizon") {
      if (!(ls >> horizon) || horizon < 0) throw fail("bad horizon");
      sigma.assign(static_cast<std::size_t>(horizon), {});
      filling.assign(static_cast<std::size_t>(horizon) + 1, {});
    } else if (key == "gauge") {
      int v;
      while (ls >> v) lambda.push_back(v);
      if (!ls.eof()) throw fail("gauge values must be integers");
    } else if (key == "spikes" || key == "filling") {
      if (!model || horizon < 0) throw fail("group and horizon must precede set entries");
      int n = -1;
      std::string colon;
      ls >> n >> colon;
      if (colon != ":") throw fail("expected ':' after the level");
      bool spike = key == "spikes";
      if (n < (spike ? 1 : 0) || n > horizon) throw fail("level out of range");
      std::string rest;
      std::getline(ls, rest);
      auto& target = spike ? sigma[static_cast<std::size_t>(n - 1)] : filling[static_cast<std::size_t>(n)];
      std::size_t start = 0;
      rest = trim(rest);
      while (!rest.empty()) {
        auto semi = rest.find(';', start);
        std::string tok = trim(rest.substr(start, semi == std::string::npos ? std::string::npos : semi - start));
        if (tok.empty()) throw fail("empty element entry");
        try {
          target.push_back(model->parse_element(tok));
        } catch (const ParseError& e) {
          throw fail(std::string("element '") + tok + "': " + e.what());
        }
        if (semi == std::string::npos) break;
        start = semi + 1;
      }
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  if (!model) throw ScaleError("scale file names no group");
  if (horizon < 0) throw ScaleError("scale file names no horizon");
  Scale s = make_scale(*model, std::move(lambda), std::move(sigma), std::move(filling), policy);
  s.escape_multiple = escape;
  return s;
}

}  // namespace arboreal
