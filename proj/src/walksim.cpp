#include "arboreal/walksim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace arboreal {

double StepDistribution::mass_of(const Element& g) const {
  auto it = index_.find(g);
  return it == index_.end() ? 0.0 : weight[static_cast<std::size_t>(it->second)];
}

Element StepDistribution::sample(Rng& rng) const {
  double u = uniform_open_closed(rng) * cumulative_.back();
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return support[static_cast<std::size_t>(it - cumulative_.begin())];
}

StepDistribution build_step_distribution(const Scale& scale, const StepLaw& law, const AlphaSequence& alpha) {
  auto simplicity = simplicity_criterion(law);
  if (simplicity.verdict != Verdict::holds)
    throw std::invalid_argument("step law " + law.describe() + " does not satisfy the simplicity criterion (" +
                                to_string(simplicity.verdict) + ")");
  if (!alpha.summable()) throw std::invalid_argument("alpha sequence " + alpha.describe() + " is not summable");
  const int top = scale.horizon();
  const GroupModel& m = scale.model;
  if (std::find(scale.filling[0].begin(), scale.filling[0].end(), m.identity()) == scale.filling[0].end())
    throw std::invalid_argument("A_0 must contain the identity");

  StepDistribution d(m, law, alpha);
  auto add = [&](const Element& g, double w, int level, bool spike) {
    if (w <= 0) return;
    d.index_.emplace(g, static_cast<int>(d.support.size()));
    d.support.push_back(g);
    d.weight.push_back(w);
    d.level.push_back(level);
    d.spike.push_back(spike);
  };
  for (int i = 0; i <= top; ++i) {
    double p = i < top ? law.p(i) : law.tail_mass(top);
    d.level_mass.push_back(p);
    const auto& a_set = scale.filling[static_cast<std::size_t>(i)];
    if (i == 0) {
      for (const auto& g : a_set) add(g, p / static_cast<double>(a_set.size()), 0, false);
      continue;
    }
    const auto& s_set = scale.sigma[static_cast<std::size_t>(i - 1)];
    double a = alpha.at(i);
    if (a > 0 && a_set.empty()) {
      d.warnings.push_back("level " + std::to_string(i) + ": A_i is empty, alpha mass moved to Sigma_i");
      a = 0;
    }
    for (const auto& g : s_set) add(g, p * (1 - a) / static_cast<double>(s_set.size()), i, true);
    for (const auto& g : a_set) add(g, p * a / static_cast<double>(a_set.size()), i, false);
  }

  double total = 0;
  for (double w : d.weight) {
    total += w;
    d.cumulative_.push_back(total);
    d.entropy -= w * std::log(w);
  }
  for (const auto& g : d.support)
    if (d.mass_of(g) != d.mass_of(m.inverse(g))) d.symmetric = false;
  return d;
}

WalkTrace trace_from_increments(const Scale& scale, const std::vector<Element>& increments, const Element& start) {
  const GroupModel& m = scale.model;
  WalkTrace t;
  t.increments = increments;
  t.positions.reserve(increments.size() + 1);
  t.positions.push_back(start);
  t.heights.reserve(increments.size());
  for (const auto& x : increments) {
    int level = scale.level_of(x);
    if (level < 0) throw std::invalid_argument("increment " + m.format(x) + " lies in no level of the scale");
    t.heights.push_back(level);
    if (m.is_identity(x)) t.positions.push_back(t.positions.back());
    else t.positions.push_back(m.multiply(t.positions.back(), x));
  }
  t.records = analyze_records(t.heights);
  for (std::size_t k = 0; k < t.records.epochs(); ++k) {
    long r = t.records.values[k];
    t.epsilon.push_back(r == 0 || !scale.in_sigma(t.x(t.records.times[k]), static_cast<int>(r)));
  }
  return t;
}

WalkTrace sample_path(const StepDistribution& dist, const Scale& scale, long length, const Element& start,
                      std::uint64_t seed) {
  if (length < 0) throw std::invalid_argument("walk length must be nonnegative");
  Rng rng(seed);
  std::vector<Element> xs;
  xs.reserve(static_cast<std::size_t>(length));
  for (long n = 0; n < length; ++n) xs.push_back(dist.sample(rng));
  WalkTrace t = trace_from_increments(scale, xs, start);
  t.seed = seed;
  return t;
}

SpikeReport verify_spike_structure(const WalkTrace& trace, const Classifier& classifier) {
  const Scale& scale = classifier.scale();
  const GroupModel& m = scale.model;
  const auto& rec = trace.records;
  const long K = static_cast<long>(rec.epochs());
  SpikeReport out;
  for (long k = 0; k < K; ++k) {
    EpochCheck e;
    e.k = k;
    e.time = rec.times[static_cast<std::size_t>(k)];
    e.value = rec.values[static_cast<std::size_t>(k)];
    const long end = k + 1 < K ? rec.times[static_cast<std::size_t>(k + 1)] : trace.length() + 1;
    const int r = static_cast<int>(e.value);
    e.simple = rec.simple[static_cast<std::size_t>(k)];
    e.sigma_valued = r >= 1 && scale.in_sigma(trace.x(e.time), r);
    // Later premises are evaluated only when the earlier ones hold.
    e.prefix_in_gauge = e.simple && e.sigma_valued && classifier.within_gauge(trace.y(e.time - 1), r);
    if (e.prefix_in_gauge) {
      e.tail_in_gauge = true;
      const Element back = m.inverse(trace.y(e.time));
      for (long n = e.time; n < end && e.tail_in_gauge; ++n) {
        if (n > e.time && m.is_identity(trace.x(n))) continue;
        e.tail_in_gauge = classifier.within_gauge(m.multiply(back, trace.y(n)), r);
      }
    }
    if (e.premises()) {
      for (long n = e.time; n < end; ++n) {
        if (n > e.time && m.is_identity(trace.x(n))) continue;
        Classification c;
        try {
          c = classifier.classify(trace.y(n));
        } catch (const HorizonError& err) {
          e.horizon_error = err.what();
          break;
        }
        ++e.positions_checked;
        bool ok = c.kind == ClassKind::spiked && c.decompositions.front().spike == trace.x(e.time) &&
                  c.parent() == trace.y(e.time - 1);
        if (!ok) {
          ++e.exceptions;
          if (out.exception_details.size() < 20) {
            std::ostringstream os;
            os << "seed " << trace.seed << " epoch " << k << " n=" << n << ": " << m.format(trace.y(n))
               << " expected spike " << m.format(trace.x(e.time)) << " after " << m.format(trace.y(e.time - 1));
            out.exception_details.push_back(os.str());
          }
        }
      }
      if (e.horizon_error.empty()) ++out.premise_epochs;
    }
    out.positions_checked += e.positions_checked;
    out.exceptions += e.exceptions;
    out.epochs.push_back(std::move(e));
  }
  return out;
}

namespace {

void push_vertex(Ray& ray, const Element& g, const Classification& c) {
  ray.vertices.push_back(g);
  ray.heights.push_back(c.height());
  if (ray.vertices.size() > 1) {
    ray.spikes.push_back(c.decompositions.front().spike);
    ray.tails.push_back(c.decompositions.front().postfix);
  }
}

}  // namespace

TrunkReport verify_trunk(const WalkTrace& trace, const SpikeReport& spikes, const Classifier& classifier) {
  TrunkReport out;
  const auto& rec = trace.records;
  const long K = static_cast<long>(rec.epochs());
  if (K == 0 || !spikes.epochs.back().premises()) return out;
  long k0 = K - 1;
  while (k0 > 0 && spikes.epochs[static_cast<std::size_t>(k0 - 1)].premises()) --k0;
  out.status = TrunkStatus::conclusive;
  out.k0 = k0;

  std::vector<Element> chain;
  for (long k = k0; k < K; ++k) chain.push_back(trace.y(rec.times[static_cast<std::size_t>(k)] - 1));
  chain.push_back(trace.y(trace.length()));

  std::vector<Classification> cls;
  for (const auto& g : chain) cls.push_back(classifier.classify(g));
  for (std::size_t j = 1; j < chain.size(); ++j) {
    ++out.chain_checks;
    if (cls[j].kind != ClassKind::spiked || cls[j].parent() != chain[j - 1]) ++out.chain_exceptions;
  }
  for (const auto& g : chain)
    out.visited &= std::find(trace.positions.begin(), trace.positions.end(), g) != trace.positions.end();
  if (out.chain_exceptions) return out;

  for (std::size_t j = 0; j < chain.size(); ++j) {
    if (j == 0) {
      out.walk_ray.vertices.push_back(chain[0]);
      out.walk_ray.heights.push_back(cls[0].height());
    } else {
      push_vertex(out.walk_ray, chain[j], cls[j]);
    }
  }

  std::vector<Element> down{chain[0]};
  std::vector<Classification> down_cls{cls[0]};
  while (down_cls.back().kind == ClassKind::spiked) {
    Element p = down_cls.back().parent();
    down.push_back(p);
    down_cls.push_back(classifier.classify(p));
  }
  for (std::size_t j = down.size(); j-- > 0;) {
    if (j + 1 == down.size()) {
      out.full_ray.vertices.push_back(down[j]);
      out.full_ray.heights.push_back(0);
    } else {
      push_vertex(out.full_ray, down[j], down_cls[j]);
    }
  }
  for (std::size_t j = 1; j < chain.size(); ++j) push_vertex(out.full_ray, chain[j], cls[j]);
  return out;
}

namespace {

long table_at(const Constraint& psi, long r) {
  return psi[std::min(static_cast<std::size_t>(r), psi.size() - 1)];
}

}  // namespace

ConstrainedReport verify_constrained(const WalkTrace& trace, const TrunkReport& trunk, const Classifier& classifier,
                                     const Constraint& psi, long min_epoch) {
  if (psi.empty()) throw std::invalid_argument("empty envelope table");
  ConstrainedReport out;
  out.min_epoch = min_epoch;
  const auto& values = trace.records.values;
  for (std::size_t k = static_cast<std::size_t>(std::max(0L, min_epoch)); k + 1 < values.size(); ++k)
    if (values[k + 1] > table_at(psi, values[k])) ++out.violations;

  if (trunk.status != TrunkStatus::conclusive || trunk.walk_ray.vertices.size() < 2) return out;
  const Ray& ray = trunk.walk_ray;
  Forest f = constrained_forest(build_forest_on(classifier, FiniteSet(ray.vertices)), psi);
  for (std::size_t j = 1; j < ray.vertices.size(); ++j) {
    if (ray.heights[j] > table_at(psi, ray.heights[j - 1])) continue;
    ++out.edges_checked;
    int child = f.index_of(ray.vertices[j]), parent = f.index_of(ray.vertices[j - 1]);
    if (f.parent[static_cast<std::size_t>(child)] != parent) ++out.edges_missing;
  }
  return out;
}

StabilizerReport stabilizer_probe(const GroupModel& model, const std::vector<Ray>& rays,
                                  const std::vector<Element>& probes, int window) {
  StabilizerReport out;
  out.rays = rays.size();
  out.probes = probes.size();
  const int half = window / 2;
  out.min_depth = rays.empty() ? 0 : SIZE_MAX;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Ray& r = rays[i];
    out.min_depth = std::min(out.min_depth, r.depth());
    if (r.depth() < static_cast<std::size_t>(window + half)) {
      ++out.shallow_rays;
      continue;
    }
    if (stabilizes(model, r, model.identity(), 0, window)) ++out.control_hits;
    for (const auto& g : probes) {
      if (model.is_identity(g)) continue;
      const Element gi = model.inverse(g);
      for (int t = -half; t <= half; ++t) {
        // g γ_n = γ_{n+t} with t < 0 is g⁻¹ γ_m = γ_{m-t}
        bool hit = t >= 0 ? stabilizes(model, r, g, t, window) : stabilizes(model, r, gi, -t, window);
        if (hit) out.hits.push_back({i, g, t});
      }
    }
  }
  return out;
}

double HittingTable::mass(const std::vector<Element>& cylinder) const {
  auto it = counts.find(cylinder);
  return it == counts.end() || paths == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(paths);
}

HittingTable hitting_statistics(const std::vector<TrunkReport>& trunks, int depth) {
  HittingTable t;
  for (const auto& tr : trunks) {
    ++t.paths;
    if (tr.status != TrunkStatus::conclusive) continue;
    ++t.conclusive;
    const auto& v = tr.full_ray.vertices;
    std::size_t len = std::min(v.size(), static_cast<std::size_t>(depth) + 1);
    ++t.counts[std::vector<Element>(v.begin(), v.begin() + static_cast<long>(len))];
  }
  return t;
}

double total_variation(const HittingTable& a, const HittingTable& b) {
  std::set<std::vector<Element>> keys;
  for (const auto& [k, c] : a.counts) keys.insert(k);
  for (const auto& [k, c] : b.counts) keys.insert(k);
  double tv = std::abs((a.paths ? 1 - static_cast<double>(a.conclusive) / a.paths : 0) -
                       (b.paths ? 1 - static_cast<double>(b.conclusive) / b.paths : 0));
  for (const auto& k : keys) tv += std::abs(a.mass(k) - b.mass(k));
  return tv / 2;
}

WalkBatchSummary run_walk_batch(const StepDistribution& dist, const Classifier& classifier, const Constraint& psi,
                                const Element& start, const WalkBatchOptions& options) {
  WalkBatchSummary s;
  const Scale& scale = classifier.scale();
  for (long i = 0; i < options.paths; ++i) {
    auto seed = derive_seed(options.seed, options.stream, static_cast<std::uint64_t>(i));
    WalkTrace trace = sample_path(dist, scale, options.length, start, seed);
    SpikeReport sp = verify_spike_structure(trace, classifier);
    TrunkReport tr = verify_trunk(trace, sp, classifier);
    ConstrainedReport cr = verify_constrained(trace, tr, classifier, psi, options.min_epoch);

    ++s.paths;
    s.premise_epochs += sp.premise_epochs;
    s.positions_checked += sp.positions_checked;
    s.spike_exceptions += sp.exceptions;
    for (const auto& e : sp.epochs) s.horizon_errors += !e.horizon_error.empty();
    for (const auto& d : sp.exception_details)
      if (s.exception_details.size() < 20) s.exception_details.push_back(d);
    if (tr.status == TrunkStatus::conclusive) {
      ++s.conclusive;
      ++s.ray_depths[tr.full_ray.depth()];
      for (long mg : sharp_boundary_margin(classifier, tr.full_ray)) {
        ++s.margins_checked;
        s.negative_margins += mg < 0;
      }
    } else {
      ++s.inconclusive;
    }
    s.chain_checks += tr.chain_checks;
    s.chain_exceptions += tr.chain_exceptions;
    s.not_visited += !tr.visited;
    s.psi_violations += cr.violations;
    s.edges_checked += cr.edges_checked;
    s.edges_missing += cr.edges_missing;
    const auto& rec = trace.records;
    for (std::size_t k = 10; k < rec.epochs() && k <= 30; ++k) {
      if (rec.values[k] < 1) continue;
      ++s.eps_epochs;
      s.eps_bad += trace.epsilon[k];
    }
    if (options.keep_trunks) s.trunks.push_back(std::move(tr));
  }
  return s;
}

Constraint psi_constraint(const StepLaw& law, long r_max) {
  auto env = build_envelopes(law, 1L << 60, r_max);
  return Constraint(env.Psi.begin(), env.Psi.end());
}

}  // namespace arboreal
