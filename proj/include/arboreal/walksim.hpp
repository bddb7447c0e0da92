#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arboreal/forest.hpp"
#include "arboreal/records.hpp"

namespace arboreal {

/// Symmetric step law on ∪Σ_i ∪ ∪A_i: level i receives p_i (levels past the horizon are
/// lumped at the top level), split as p_i(1-α_i) on Σ_i and p_i·α_i on A_i; all of p_0 sits on A_0.
struct StepDistribution {
  StepDistribution(GroupModel m, StepLaw l, AlphaSequence a) : model(std::move(m)), law(std::move(l)), alpha(a) {}

  GroupModel model;
  StepLaw law;
  AlphaSequence alpha;
  std::vector<double> level_mass;              // μ(Σ_i ∪ A_i), i = 0..N
  std::vector<Element> support;
  std::vector<double> weight;                  // μ(support[k])
  std::vector<int> level;                      // ζ(support[k])
  std::vector<bool> spike;                     // support[k] ∈ Σ_level
  bool symmetric = true;
  double entropy = 0;                          // -Σ μ log μ, nats
  std::vector<std::string> warnings;

  double mass_of(const Element& g) const;
  Element sample(Rng& rng) const;

 private:
  friend StepDistribution build_step_distribution(const Scale&, const StepLaw&, const AlphaSequence&);
  std::vector<double> cumulative_;
  ElementMap<int> index_;
};

/// Throws std::invalid_argument when the law does not satisfy the simplicity criterion, the α family
/// is not summable, or A_0 misses the identity.
StepDistribution build_step_distribution(const Scale& scale, const StepLaw& law, const AlphaSequence& alpha = {});

struct WalkTrace {
  std::uint64_t seed = 0;
  std::vector<Element> increments;  // x_1..x_T (increments[n-1] = x_n)
  std::vector<Element> positions;   // y_0..y_T
  std::vector<long> heights;        // X_n = ζ(x_n)
  RecordTrace records;
  std::vector<bool> epsilon;        // per epoch: x_{T_k} ∉ Σ_{R_k}

  long length() const { return static_cast<long>(increments.size()); }
  const Element& x(long n) const { return increments[static_cast<std::size_t>(n - 1)]; }
  const Element& y(long n) const { return positions[static_cast<std::size_t>(n)]; }
};

WalkTrace sample_path(const StepDistribution& dist, const Scale& scale, long length, const Element& start,
                      std::uint64_t seed);
/// Test hook: a trace from a prescribed increment list; every increment must lie in some level.
WalkTrace trace_from_increments(const Scale& scale, const std::vector<Element>& increments, const Element& start);

struct EpochCheck {
  long k = 0;          // 0-based epoch index
  long time = 0;       // T_k
  long value = 0;      // R_k
  bool simple = false;
  bool sigma_valued = false;
  bool prefix_in_gauge = false;  // |y_{T_k-1}|_{R_k} <= λ(R_k)
  bool tail_in_gauge = false;    // |y_{T_k}^{-1} y_n|_{R_k} <= λ(R_k) for T_k <= n < T_{k+1}
  long positions_checked = 0;
  long exceptions = 0;
  std::string horizon_error;

  bool premises() const { return simple && sigma_valued && prefix_in_gauge && tail_in_gauge && horizon_error.empty(); }
};

struct SpikeReport {
  std::vector<EpochCheck> epochs;
  long premise_epochs = 0;
  long positions_checked = 0;
  long exceptions = 0;
  std::vector<std::string> exception_details;
};

/// Where every premise of an epoch holds, asserts classify(y_n) = SPIKED(prefix y_{T_k-1}, spike x_{T_k}).
SpikeReport verify_spike_structure(const WalkTrace& trace, const Classifier& classifier);

enum class TrunkStatus { conclusive, inconclusive };

struct TrunkReport {
  TrunkStatus status = TrunkStatus::inconclusive;
  long k0 = -1;
  long chain_checks = 0;
  long chain_exceptions = 0;
  bool visited = true;   // every walk-ray vertex is a path position
  Ray walk_ray;          // y_{T_k - 1} for k >= k0, then y_T
  Ray full_ray;          // walk_ray prefixed with its π-chain down to an unspiked root
};

TrunkReport verify_trunk(const WalkTrace& trace, const SpikeReport& spikes, const Classifier& classifier);

struct ConstrainedReport {
  long min_epoch = 0;
  long violations = 0;            // epochs k >= min_epoch with R_{k+1} > Ψ(R_k)
  long edges_checked = 0;         // walk-ray edges at non-violating epochs k >= k0
  long edges_missing = 0;         // ... absent from constrained_forest(·, Ψ)
};

ConstrainedReport verify_constrained(const WalkTrace& trace, const TrunkReport& trunk, const Classifier& classifier,
                                     const Constraint& psi, long min_epoch = 10);

struct StabilizerHit {
  std::size_t ray = 0;
  Element g;
  int shift = 0;
};

struct StabilizerReport {
  std::size_t rays = 0;
  std::size_t probes = 0;
  std::size_t min_depth = 0;
  std::size_t shallow_rays = 0;     // depth below window + window/2, not probed
  std::vector<StabilizerHit> hits;  // g ≠ e
  std::size_t control_hits = 0;     // probed rays where g = e, t = 0 holds
  std::size_t probed() const { return rays - shallow_rays; }
};

/// Tests g·γ_n = γ_{n+t} over the last `window` comparable indices for |t| <= window/2.
/// Rays shallower than window + window/2 give too few comparisons; they are counted and skipped.
StabilizerReport stabilizer_probe(const GroupModel& model, const std::vector<Ray>& rays,
                                  const std::vector<Element>& probes, int window);

struct HittingTable {
  long paths = 0;
  long conclusive = 0;
  std::map<std::vector<Element>, long> counts;  // first d+1 vertices of the full ray

  double mass(const std::vector<Element>& cylinder) const;
};

HittingTable hitting_statistics(const std::vector<TrunkReport>& trunks, int depth);
double total_variation(const HittingTable& a, const HittingTable& b);

struct WalkBatchOptions {
  long paths = 1000;
  long length = 10000;
  std::uint64_t seed = 1;
  std::uint64_t stream = kStreamWalk;
  long min_epoch = 10;
  bool keep_trunks = false;
};

struct WalkBatchSummary {
  long paths = 0;
  long premise_epochs = 0;
  long positions_checked = 0;
  long spike_exceptions = 0;
  long horizon_errors = 0;
  long conclusive = 0;
  long inconclusive = 0;
  long chain_checks = 0;
  long chain_exceptions = 0;
  long not_visited = 0;
  long psi_violations = 0;
  long edges_checked = 0;
  long edges_missing = 0;
  long negative_margins = 0;
  long margins_checked = 0;
  long eps_epochs = 0;        // epochs with R_k >= 1 and k in [10, 30]
  long eps_bad = 0;           // ... with x_{T_k} ∉ Σ_{R_k}
  std::map<std::size_t, long> ray_depths;
  std::vector<std::string> exception_details;
  std::vector<TrunkReport> trunks;

  double mean_psi_violations() const { return paths ? static_cast<double>(psi_violations) / paths : 0; }
  double conclusive_fraction() const { return paths ? static_cast<double>(conclusive) / paths : 0; }
};

/// Runs sample_path and every verifier on paths seeded by derive_seed(seed, stream, i).
WalkBatchSummary run_walk_batch(const StepDistribution& dist, const Classifier& classifier, const Constraint& psi,
                                const Element& start, const WalkBatchOptions& options);

/// Ψ(0..r_max) from build_envelopes as a constraint table.
Constraint psi_constraint(const StepLaw& law, long r_max);

}  // namespace arboreal
