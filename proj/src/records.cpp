#include "arboreal/records.hpp"

#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace arboreal {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr long kEnvelopeTable = 4096;

double shape(TailKind kind, double param, long j) {
  switch (kind) {
    case TailKind::power: return std::pow(static_cast<double>(j) + 1.0, -param);
    case TailKind::geometric: return std::pow(param, static_cast<double>(j));
    default: return 0.0;
  }
}

double shape_sum_from(TailKind kind, double param, long j) {
  switch (kind) {
    case TailKind::power: return gsl_sf_hzeta(param, static_cast<double>(j) + 1.0);
    case TailKind::geometric: return std::pow(param, static_cast<double>(j)) / (1.0 - param);
    default: return 0.0;
  }
}

void check_family(TailKind family, double param) {
  if (family == TailKind::power && !(param > 1.0)) throw std::invalid_argument("power tail needs s > 1");
  if (family == TailKind::geometric && !(param > 0.0 && param < 1.0))
    throw std::invalid_argument("geometric tail needs 0 < q < 1");
  if (family != TailKind::power && family != TailKind::geometric)
    throw std::invalid_argument("analytic family must be power or geometric");
}

constexpr long kSearchCap = std::numeric_limits<long>::max() / 4;

/// Smallest j >= lo with pred(j), for pred monotone false→true; returns -1 past kSearchCap.
template <class Pred>
long first_true(long lo, Pred pred) {
  if (pred(lo)) return lo;
  long good = -1, bad = lo, step = 1;
  while (true) {
    long probe = bad + step;
    if (probe > kSearchCap) return -1;
    if (pred(probe)) {
      good = probe;
      break;
    }
    bad = probe;
    step *= 2;
  }
  while (good - bad > 1) {
    long mid = bad + (good - bad) / 2;
    (pred(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace

StepLaw::StepLaw(std::vector<double> head, TailKind tail, double param, double scale)
    : head_(std::move(head)), tail_(tail), param_(param), scale_(scale) {
  if (head_.empty()) throw std::invalid_argument("step law needs at least p_0");
  for (double p : head_)
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("step law weights must be finite and >= 0");
  const long top = static_cast<long>(head_.size());
  suffix_.assign(head_.size() + 1, 0.0);
  double head_sum = 0;
  for (double p : head_) head_sum += p;
  if (tail_ == TailKind::power || tail_ == TailKind::geometric) {
    suffix_[static_cast<std::size_t>(top)] = scale_ * shape_sum_from(tail_, param_, top);
  } else if (tail_ == TailKind::unknown) {
    suffix_[static_cast<std::size_t>(top)] = std::max(0.0, 1.0 - head_sum);
  }
  for (long j = top - 1; j >= 0; --j)
    suffix_[static_cast<std::size_t>(j)] = suffix_[static_cast<std::size_t>(j + 1)] + head_[static_cast<std::size_t>(j)];
  if (tail_ == TailKind::unknown) {
    if (head_sum > 1.0 + kNormTolerance) throw std::invalid_argument("truncated table has mass above 1");
  } else if (std::fabs(suffix_[0] - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os << "step law mass is " << suffix_[0] << ", not 1";
    throw std::invalid_argument(os.str());
  }
}

StepLaw StepLaw::power(double s, int truncation) {
  check_family(TailKind::power, s);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  const double z = gsl_sf_hzeta(s, 1.0);
  std::vector<double> head;
  for (int j = 0; j <= truncation; ++j) head.push_back(shape(TailKind::power, s, j) / z);
  return StepLaw(std::move(head), TailKind::power, s, 1.0 / z);
}

StepLaw StepLaw::geometric(double q, int truncation) {
  check_family(TailKind::geometric, q);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  std::vector<double> head;
  for (int j = 0; j <= truncation; ++j) head.push_back((1.0 - q) * shape(TailKind::geometric, q, j));
  return StepLaw(std::move(head), TailKind::geometric, q, 1.0 - q);
}

StepLaw StepLaw::table(std::vector<double> p, TailKind tail) {
  if (tail != TailKind::none && tail != TailKind::unknown)
    throw std::invalid_argument("a table law carries no analytic tail; use power, geometric or lazy");
  return StepLaw(std::move(p), tail, 0.0, 0.0);
}

StepLaw StepLaw::lazy(double p0, TailKind family, double param, int truncation) {
  check_family(family, param);
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("lazy mass must lie in (0, 1)");
  if (truncation < 1) throw std::invalid_argument("lazy law needs truncation >= 1");
  const double scale = (1.0 - p0) / shape_sum_from(family, param, 1);
  std::vector<double> head{p0};
  for (int j = 1; j <= truncation; ++j) head.push_back(scale * shape(family, param, j));
  return StepLaw(std::move(head), family, param, scale);
}

std::string StepLaw::describe() const {
  std::ostringstream os;
  switch (tail_) {
    case TailKind::power: os << "power(s=" << param_ << ")"; break;
    case TailKind::geometric: os << "geometric(q=" << param_ << ")"; break;
    case TailKind::none: os << "table(finite support)"; break;
    case TailKind::unknown: os << "table(truncated)"; break;
  }
  os << " p0=" << head_[0] << " J=" << truncation();
  return os.str();
}

double StepLaw::shape_tail_sum(long j) const { return scale_ * shape_sum_from(tail_, param_, j); }

double StepLaw::p(long j) const {
  if (j < 0) return 0.0;
  if (j < static_cast<long>(head_.size())) return head_[static_cast<std::size_t>(j)];
  if (tail_ == TailKind::unknown) throw std::domain_error("p_j beyond the truncation of a table law is unknown");
  return scale_ * shape(tail_, param_, j);
}

double StepLaw::tail_mass(long j) const {
  if (j <= 0) return 1.0;
  if (j < static_cast<long>(suffix_.size())) return suffix_[static_cast<std::size_t>(j)];
  if (tail_ == TailKind::none) return 0.0;
  if (tail_ == TailKind::unknown) throw std::domain_error("tail mass beyond the truncation of a table law is unknown");
  return shape_tail_sum(j);
}

double StepLaw::rho(long j) const {
  double t = tail_mass(j);
  if (!(t > 0.0)) throw std::domain_error("rho_" + std::to_string(j) + " undefined: no mass at or above j");
  return std::min(1.0, p(j) / t);
}

long StepLaw::sample(Rng& rng) const {
  const double v = uniform_open_closed(rng);
  // X = max{j : P(X >= j) >= v}.
  auto it = std::partition_point(suffix_.begin(), suffix_.end(), [v](double s) { return s >= v; });
  long j = static_cast<long>(it - suffix_.begin()) - 1;
  if (j < static_cast<long>(head_.size())) return j;
  if (tail_ == TailKind::unknown) throw std::domain_error("sample fell into the unspecified tail of a table law");
  long first_below = first_true(j + 1, [&](long k) { return tail_mass(k) < v; });
  if (first_below < 0) return kSearchCap;
  return first_below - 1;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "HOLDS";
    case Verdict::fails: return "FAILS";
    case Verdict::undecided: return "UNDECIDED";
  }
  return {};
}

SimplicityResult simplicity_criterion(const StepLaw& law) {
  SimplicityResult r;
  long last = law.truncation();
  if (law.infinite_support()) last = std::max<long>(last, 1000);
  for (long j = 0; j <= last; ++j) {
    if (!(law.tail_mass(j) > 0.0)) break;
    double rho = law.rho(j);
    r.partial_sum += rho * rho;
    r.evaluated_to = j;
  }
  switch (law.tail()) {
    case TailKind::none:
      r.verdict = Verdict::fails;
      r.reason = "finite support: the top value repeats forever";
      break;
    case TailKind::unknown:
      r.verdict = Verdict::undecided;
      r.reason = "truncated table: convergence of the rho-series cannot be decided from a finite head";
      break;
    case TailKind::geometric:
      r.verdict = Verdict::fails;
      r.reason = "geometric tail: rho_j is constant, so the sum of rho_j^2 diverges";
      break;
    case TailKind::power:
      r.verdict = Verdict::holds;
      r.reason = "power tail: rho_j ~ (s-1)/(j+1), so the sum of rho_j^2 converges";
      break;
  }
  return r;
}

double vervaat_transition(const StepLaw& law, long i, long j) {
  if (i < 0 || j < 0) throw std::invalid_argument("record values are nonnegative");
  if (i > j) return 0.0;
  double prod = 1.0;
  for (long k = i; k < j; ++k) prod *= 1.0 - law.rho(k);
  return prod * law.rho(j);
}

double vervaat_row_remainder(const StepLaw& law, long i, long j) {
  if (j < i) return 1.0;
  return law.tail_mass(j + 1) / law.tail_mass(i);
}

RecordTrace analyze_records(const std::vector<long>& xs) {
  RecordTrace t;
  long cur = -1;
  long max = -1, count = 0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    long x = xs[n];
    if (x < 0) throw std::invalid_argument("record sequences take values in Z+");
    if (x > max) {
      max = x;
      count = 1;
    } else if (x == max) {
      ++count;
    }
    t.multiplicity.push_back(count);
    if (x >= cur) {
      t.times.push_back(static_cast<long>(n) + 1);
      t.values.push_back(x);
      if (t.occupation[x]++ == 0) t.distinct_values.push_back(x);
      cur = x;
    }
  }
  for (long v : t.values) t.simple.push_back(t.occupation[v] == 1);
  return t;
}

OccupationReport occupation_law_check(const StepLaw& law, long runs, long horizon, long max_j, std::uint64_t seed) {
  constexpr int kBins = 5;
  OccupationReport rep;
  rep.runs = runs;
  const std::size_t width = static_cast<std::size_t>(max_j) + 1;
  std::vector<std::vector<long>> zcount(width, std::vector<long>(kBins + 1, 0));
  std::vector<long> ge1(width, 0), ge2(width, 0), both(width, 0);
  std::vector<long> z(width);
  for (long r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, kStreamOccupation, static_cast<std::uint64_t>(r)));
    std::fill(z.begin(), z.end(), 0);
    long cur = -1;
    bool done = false;
    for (long n = 0; n < horizon; ++n) {
      long x = law.sample(rng);
      if (x < cur) continue;
      cur = x;
      if (x > max_j) {
        done = true;
        break;
      }
      ++z[static_cast<std::size_t>(x)];
    }
    if (!done) ++rep.censored;
    for (std::size_t j = 0; j < width; ++j) {
      ++zcount[j][static_cast<std::size_t>(std::min<long>(z[j], kBins))];
      if (z[j] >= 1) ++ge1[j];
      if (z[j] >= 2) ++ge2[j];
      if (j + 1 < width && z[j] >= 1 && z[j + 1] >= 1) ++both[j];
    }
  }
  const double nr = static_cast<double>(runs);
  for (long j = 0; j <= max_j; ++j) {
    OccupationRow row;
    row.j = j;
    const std::size_t ju = static_cast<std::size_t>(j);
    if (!(law.tail_mass(j + 1) > 0.0)) {
      row.excluded = true;  // ρ_j = 1: absorbing, Z_j unbounded
      row.rho = 1.0;
      rep.rows.push_back(row);
      continue;
    }
    row.rho = law.rho(j);
    row.rho_sq = row.rho * row.rho;
    row.empirical = ge2[ju] / nr;
    row.stderr_ = std::sqrt(row.rho_sq * (1.0 - row.rho_sq) / nr);
    for (int m = 0; m < kBins; ++m) {
      row.zdist_empirical.push_back(zcount[ju][static_cast<std::size_t>(m)] / nr);
      row.zdist_model.push_back((1.0 - row.rho) * std::pow(row.rho, m));
    }
    rep.rows.push_back(row);
  }
  for (long j = 0; j < max_j; ++j) {
    const std::size_t ju = static_cast<std::size_t>(j);
    double pi = ge1[ju] / nr, pj = ge1[ju + 1] / nr;
    IndependenceRow ir;
    ir.i = j;
    ir.j = j + 1;
    ir.covariance = both[ju] / nr - pi * pj;
    ir.stderr_ = std::sqrt(pi * (1 - pi) * pj * (1 - pj) / nr);
    rep.pairs.push_back(ir);
  }
  return rep;
}

TransitionReport record_chain_check(const StepLaw& law, long transitions, long horizon, long max_i, long max_j,
                                    std::uint64_t seed) {
  TransitionReport rep;
  const std::size_t rows = static_cast<std::size_t>(max_i) + 1, cols = static_cast<std::size_t>(max_j) + 1;
  std::vector<std::vector<long>> count(rows, std::vector<long>(cols, 0));
  std::vector<long> from(rows, 0);
  for (std::uint64_t r = 0; rep.transitions < transitions; ++r) {
    Rng rng(derive_seed(seed, kStreamRecords, r));
    long cur = -1;
    for (long n = 0; n < horizon && rep.transitions < transitions; ++n) {
      long x = law.sample(rng);
      if (x < cur) continue;
      if (cur >= 0) {
        ++rep.transitions;
        ++from[static_cast<std::size_t>(cur)];
        if (x <= max_j) ++count[static_cast<std::size_t>(cur)][static_cast<std::size_t>(x)];
      }
      cur = x;
      if (cur > max_i) break;
    }
  }
  for (long i = 0; i <= max_i; ++i)
    for (long j = i; j <= max_j; ++j) {
      TransitionCell c;
      c.i = i;
      c.j = j;
      c.from_total = from[static_cast<std::size_t>(i)];
      c.observed = count[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      c.model = vervaat_transition(law, i, j);
      if (c.from_total > 0) {
        c.empirical = static_cast<double>(c.observed) / c.from_total;
        c.stderr_ = std::sqrt(c.model * (1 - c.model) / c.from_total);
      }
      rep.cells.push_back(c);
    }
  return rep;
}

DichotomyReport simplicity_dichotomy(const StepLaw& law, long runs, long horizon, long first_m, std::uint64_t seed) {
  DichotomyReport rep;
  rep.runs = runs;
  std::vector<long> occupation;  // per distinct record value, in order of appearance
  for (long r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, kStreamDichotomy, static_cast<std::uint64_t>(r)));
    occupation.clear();
    long cur = -1;
    for (long n = 0; n < horizon; ++n) {
      long x = law.sample(rng);
      if (x < cur) continue;
      if (x == cur) ++occupation.back();
      else occupation.push_back(1);
      cur = x;
    }
    bool all = true, some = false;
    for (std::size_t k = 0; k < occupation.size(); ++k) {
      if (occupation[k] < 2) continue;
      if (static_cast<long>(k) < first_m) some = true;
      else all = false;
    }
    rep.all_within_first += all;
    rep.some_within_first += some;
  }
  return rep;
}

long EnvelopePair::Phi_at(long r) const {
  if (r < 0 || r >= static_cast<long>(Phi.size())) throw std::out_of_range("Phi table does not cover r");
  return Phi[static_cast<std::size_t>(r)];
}

long EnvelopePair::Psi_at(long r) const {
  if (r < 0 || r >= static_cast<long>(Psi.size())) throw std::out_of_range("Psi table does not cover r");
  return Psi[static_cast<std::size_t>(r)];
}

EnvelopePair build_envelopes(const StepLaw& law, long n_max, long r_max, double exponent) {
  if (!law.infinite_support()) throw std::invalid_argument("envelopes need a law with an infinite analytic tail");
  if (n_max < 3 || r_max < 0) throw std::invalid_argument("envelopes need n_max >= 3 and r_max >= 0");
  // F_j >= t  <=>  P(X >= j+1) <= 1 - t; working with tail masses keeps precision for t near 1.
  auto phi_gap = [exponent](long n) { return -std::expm1(-exponent * std::log(static_cast<double>(n)) / n); };
  auto psi_of = [&](long n) {
    const double gap = std::pow(static_cast<double>(n), -exponent);
    return first_true(0, [&](long j) { return law.tail_mass(j + 1) <= gap; });
  };
  EnvelopePair e;
  const long table = std::min<long>(n_max, kEnvelopeTable);
  for (long n = 1; n <= table; ++n) {
    const double gap = phi_gap(n);
    e.phi.push_back(gap > 0 ? first_true(0, [&](long j) { return law.tail_mass(j + 1) <= gap; }) : -1);
    e.psi.push_back(psi_of(n));
  }
  // n^{-β/n} increases for n >= 3, so {n >= 3 : φ(n) <= r} is an initial segment found by bisection.
  for (long r = 0; r <= r_max; ++r) {
    const double tail = law.tail_mass(r + 1);
    if (phi_gap(n_max) >= tail)
      throw std::invalid_argument("envelope horizon n_max=" + std::to_string(n_max) + " too small for r=" +
                                  std::to_string(r));
    long best = 0;
    if (phi_gap(2) >= tail) best = 2;
    if (phi_gap(3) >= tail) {
      long lo = 3, hi = n_max;  // pred(lo) true, pred(hi) false
      while (hi - lo > 1) {
        long mid = lo + (hi - lo) / 2;
        (phi_gap(mid) >= tail ? lo : hi) = mid;
      }
      best = std::max(best, lo);
    }
    e.Phi.push_back(1 + best);
    e.Psi.push_back(psi_of(1 + best));
  }
  return e;
}

double AlphaSequence::at(long j) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::constant: return std::clamp(c, 0.0, 1.0);
    case Kind::power: return std::clamp(c * std::pow(static_cast<double>(j) + 1.0, -exponent), 0.0, 1.0);
  }
  return 0.0;
}

std::string AlphaSequence::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::zero: os << "zero"; break;
    case Kind::constant: os << "constant(" << c << ")"; break;
    case Kind::power: os << "power(c=" << c << ", e=" << exponent << ")"; break;
  }
  return os.str();
}

MixedPopulationReport mixed_population_check(const StepLaw& law, const AlphaSequence& alpha, long runs, long horizon,
                                             std::uint64_t seed) {
  MixedPopulationReport rep;
  rep.runs = runs;
  if (!alpha.summable()) rep.warnings.push_back("alpha-series " + alpha.describe() + " is not summable");
  if (simplicity_criterion(law).verdict != Verdict::holds)
    rep.warnings.push_back("projected law " + law.describe() + " does not satisfy the simplicity criterion");
  double sum_bad = 0, sum_bad_sq = 0, sum_exp = 0, sum_exp_sq = 0, sum_last = 0;
  for (long r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, kStreamMixed, static_cast<std::uint64_t>(r)));
    long cur = -1, epochs = 0, bad = 0, last_bad = 0;
    double expected = 0;
    for (long n = 0; n < horizon; ++n) {
      long x = law.sample(rng);
      double a = alpha.at(x);
      bool eps = uniform_open_closed(rng) <= a;
      if (x < cur) continue;
      cur = x;
      ++epochs;
      expected += a;
      if (eps) {
        ++bad;
        last_bad = epochs;
      }
    }
    sum_bad += bad;
    sum_bad_sq += static_cast<double>(bad) * bad;
    sum_exp += expected;
    sum_exp_sq += expected * expected;
    sum_last += last_bad;
    rep.max_last_bad = std::max(rep.max_last_bad, last_bad);
    ++rep.last_bad_distribution[last_bad];
    if (epochs > 0 && bad == epochs) ++rep.runs_all_bad;
  }
  const double nr = static_cast<double>(runs);
  rep.mean_bad_epochs = sum_bad / nr;
  rep.stderr_bad_epochs = std::sqrt(std::max(0.0, sum_bad_sq / nr - rep.mean_bad_epochs * rep.mean_bad_epochs) / nr);
  rep.mean_expected_bad = sum_exp / nr;
  rep.stderr_expected_bad =
      std::sqrt(std::max(0.0, sum_exp_sq / nr - rep.mean_expected_bad * rep.mean_expected_bad) / nr);
  rep.mean_last_bad = sum_last / nr;
  return rep;
}

}  // namespace arboreal
