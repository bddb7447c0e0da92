#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "arboreal/records.hpp"

using namespace arboreal;

namespace {

constexpr int kIterations = 1000;

/// ρ_j by direct summation of the point masses, for the power family.
double power_rho_by_summation(double s, long j) {
  double num = std::pow(j + 1.0, -s), den = 0;
  for (long k = j; k < j + 2'000'000; ++k) den += std::pow(k + 1.0, -s);
  return num / den;
}

}  // namespace

TEST(StepLaw, Normalization) {
  for (const auto& law : {StepLaw::power(3), StepLaw::power(2.5, 10), StepLaw::geometric(0.5), StepLaw::geometric(0.9, 5),
                          StepLaw::lazy(0.99, TailKind::power, 3), StepLaw::lazy(0.5, TailKind::geometric, 0.3)}) {
    double sum = 0;
    for (long j = 0; j <= law.truncation(); ++j) sum += law.p(j);
    EXPECT_NEAR(sum + law.tail_mass(law.truncation() + 1), 1.0, 1e-12) << law.describe();
    EXPECT_NEAR(law.tail_mass(0), 1.0, 1e-12);
    for (long j = 0; j < 200; ++j) EXPECT_NEAR(law.tail_mass(j) - law.tail_mass(j + 1), law.p(j), 1e-14);
  }
  EXPECT_THROW(StepLaw::table({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(StepLaw::table({0.5, -0.1, 0.6}), std::invalid_argument);
  EXPECT_THROW(StepLaw::power(1.0), std::invalid_argument);
}

TEST(Rho, Examples) {
  auto geo = StepLaw::geometric(0.5);
  for (long j : {0L, 1L, 5L, 64L, 65L, 300L}) EXPECT_NEAR(geo.rho(j), 0.5, 1e-12) << j;
  auto point = StepLaw::table({1.0});
  EXPECT_DOUBLE_EQ(point.rho(0), 1.0);
  EXPECT_THROW(point.rho(1), std::domain_error);
  auto pw = StepLaw::power(3);
  for (long j : {5L, 20L, 100L}) EXPECT_NEAR(pw.rho(j), power_rho_by_summation(3, j), 1e-9) << j;
  EXPECT_NEAR(pw.rho(1000) * 1001.0, 2.0, 0.01);
}

TEST(Simplicity, Dichotomy) {
  EXPECT_EQ(simplicity_criterion(StepLaw::power(3)).verdict, Verdict::holds);
  auto geo = simplicity_criterion(StepLaw::geometric(0.5));
  EXPECT_EQ(geo.verdict, Verdict::fails);
  EXPECT_GT(geo.partial_sum, 200.0);
  EXPECT_EQ(simplicity_criterion(StepLaw::table({0.5, 0.5})).verdict, Verdict::fails);
  EXPECT_EQ(simplicity_criterion(StepLaw::table({0.5, 0.25}, TailKind::unknown)).verdict, Verdict::undecided);
  EXPECT_EQ(simplicity_criterion(StepLaw::lazy(0.99, TailKind::power, 3)).verdict, Verdict::holds);
}

TEST(Vervaat, Examples) {
  auto geo = StepLaw::geometric(0.5);
  EXPECT_NEAR(vervaat_transition(geo, 3, 3), 0.5, 1e-15);
  EXPECT_EQ(vervaat_transition(geo, 2, 1), 0.0);
  EXPECT_NEAR(vervaat_transition(geo, 0, 2), 0.125, 1e-15);
}

TEST(Vervaat, RowsSumToOne) {
  for (const auto& law : {StepLaw::power(3), StepLaw::geometric(0.5), StepLaw::lazy(0.9, TailKind::power, 3)}) {
    for (long i = 0; i <= 30; ++i)
      for (long last : {i, i + 5, i + 80}) {
        double row = 0;
        for (long j = i; j <= last; ++j) row += vervaat_transition(law, i, j);
        EXPECT_NEAR(row + vervaat_row_remainder(law, i, last), 1.0, 1e-12) << law.describe() << " i=" << i;
        EXPECT_LE(row, 1.0 + 1e-12);
      }
  }
}

TEST(Vervaat, ProductMatchesTelescopedForm) {
  auto law = StepLaw::power(3);
  for (long i = 0; i < 20; ++i)
    for (long j = i + 1; j < 40; ++j)
      EXPECT_NEAR(vervaat_transition(law, i, j), law.p(j) / law.tail_mass(i), 1e-14);
}

TEST(AnalyzeRecords, Examples) {
  auto flat = analyze_records({0, 0, 0});
  EXPECT_EQ(flat.times, (std::vector<long>{1, 2, 3}));
  EXPECT_EQ(flat.values, (std::vector<long>{0, 0, 0}));
  EXPECT_EQ(flat.occupation_of(0), 3);

  auto t = analyze_records({1, 0, 2, 2, 3});
  EXPECT_EQ(t.times, (std::vector<long>{1, 3, 4, 5}));
  EXPECT_EQ(t.values, (std::vector<long>{1, 2, 2, 3}));
  EXPECT_EQ(t.simple, (std::vector<bool>{true, false, false, true}));
  EXPECT_EQ(t.distinct_values, (std::vector<long>{1, 2, 3}));

  auto inc = analyze_records({0, 2, 5, 9});
  EXPECT_EQ(inc.times.size(), 4u);
  for (bool s : inc.simple) EXPECT_TRUE(s);
}

TEST(AnalyzeRecords, AgreesWithNaiveRecomputation) {
  std::mt19937_64 rng(17);
  for (int it = 0; it < kIterations; ++it) {
    std::vector<long> xs(1 + rng() % 60);
    for (auto& x : xs) x = static_cast<long>(rng() % 6);
    auto t = analyze_records(xs);
    long sum_z = 0;
    for (const auto& [v, z] : t.occupation) sum_z += z;
    EXPECT_EQ(sum_z, static_cast<long>(t.epochs()));
    EXPECT_EQ(t.times.front(), 1);
    for (std::size_t n = 0; n < xs.size(); ++n) {
      long m = *std::max_element(xs.begin(), xs.begin() + static_cast<long>(n) + 1);
      long k = std::count(xs.begin(), xs.begin() + static_cast<long>(n) + 1, m);
      EXPECT_EQ(t.multiplicity[n], k);
      bool is_record = true;
      for (std::size_t i = 0; i < n; ++i) is_record &= xs[n] >= xs[i];
      EXPECT_EQ(std::count(t.times.begin(), t.times.end(), static_cast<long>(n) + 1) == 1, is_record);
    }
    for (std::size_t k = 1; k < t.values.size(); ++k) EXPECT_LE(t.values[k - 1], t.values[k]);
  }
}

TEST(Sampling, MatchesLaw) {
  auto law = StepLaw::power(3, 8);
  Rng rng(derive_seed(1, 99, 0));
  constexpr long n = 200000;
  std::vector<long> counts(12, 0);
  long beyond = 0;
  for (long i = 0; i < n; ++i) {
    long x = law.sample(rng);
    if (x < 12) ++counts[static_cast<std::size_t>(x)];
    else ++beyond;
  }
  for (long j = 0; j < 12; ++j) {
    double p = law.p(j), se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(counts[static_cast<std::size_t>(j)] / static_cast<double>(n), p, 4 * se) << j;
  }
  double pt = law.tail_mass(12);
  EXPECT_NEAR(beyond / static_cast<double>(n), pt, 4 * std::sqrt(pt * (1 - pt) / n));
}

TEST(Sampling, Deterministic) {
  auto law = StepLaw::geometric(0.5);
  Rng a(derive_seed(7, kStreamRecords, 3)), b(derive_seed(7, kStreamRecords, 3));
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(law.sample(a), law.sample(b));
  EXPECT_NE(derive_seed(7, kStreamRecords, 3), derive_seed(7, kStreamRecords, 4));
  EXPECT_NE(derive_seed(7, kStreamRecords, 3), derive_seed(7, kStreamWalk, 3));
}

TEST(Occupation, GeometricZeroMatchesQuarter) {
  auto rep = occupation_law_check(StepLaw::geometric(0.5), 20000, 100000, 3, 5);
  const auto& row = rep.rows[0];
  EXPECT_NEAR(row.rho_sq, 0.25, 1e-12);
  EXPECT_NEAR(row.empirical, 0.25, 3 * row.stderr_);
  EXPECT_EQ(rep.censored, 0);
}

TEST(Occupation, AbsorbingTopIsExcluded) {
  auto rep = occupation_law_check(StepLaw::table({0.5, 0.5}), 100, 50, 1, 5);
  EXPECT_FALSE(rep.rows[0].excluded);
  EXPECT_TRUE(rep.rows[1].excluded);
}

TEST(Occupation, PowerLawFifthLevel) {
  auto rep = occupation_law_check(StepLaw::power(3), 20000, 1000000, 5, 8);
  const auto& row = rep.rows[5];
  EXPECT_NEAR(row.empirical, row.rho_sq, 3 * row.stderr_);
}

TEST(Envelopes, GeometricPsiClosedForm) {
  auto e = build_envelopes(StepLaw::geometric(0.5), 1L << 40, 10);
  for (long n = 1; n <= 400; ++n) {
    long expect = std::max(0L, static_cast<long>(std::ceil(2 * std::log2(static_cast<double>(n)))) - 1);
    EXPECT_EQ(e.psi[static_cast<std::size_t>(n - 1)], expect) << n;
  }
}

TEST(Envelopes, MonotoneAndDominating) {
  for (const auto& law : {StepLaw::power(3), StepLaw::geometric(0.5), StepLaw::lazy(0.99, TailKind::power, 3)}) {
    auto e = build_envelopes(law, 1L << 60, law.tail() == TailKind::geometric ? 20 : 60);
    EXPECT_EQ(e.psi[0], 0);
    for (std::size_t r = 1; r < e.Phi.size(); ++r) {
      EXPECT_GE(e.Phi[r], e.Phi[r - 1]);
      EXPECT_GE(e.Psi[r], e.Psi[r - 1]);
    }
    for (std::size_t r = 0; r < e.Psi.size(); ++r) EXPECT_GE(e.Psi[r], static_cast<long>(r)) << law.describe();
    for (std::size_t n = 3; n < e.phi.size(); ++n) EXPECT_GE(e.phi[n], e.phi[n - 1]);
  }
  EXPECT_THROW(build_envelopes(StepLaw::power(3), 100, 40), std::invalid_argument);
  EXPECT_THROW(build_envelopes(StepLaw::table({1.0}), 10, 1), std::invalid_argument);
}

TEST(MixedPopulation, Controls) {
  auto law = StepLaw::power(3);
  auto none = mixed_population_check(law, {}, 500, 2000, 3);
  EXPECT_EQ(none.mean_last_bad, 0.0);
  EXPECT_EQ(none.max_last_bad, 0);
  AlphaSequence all{AlphaSequence::Kind::constant, 1.0, 0};
  auto every = mixed_population_check(law, all, 500, 2000, 3);
  EXPECT_EQ(every.runs_all_bad, 500);
  EXPECT_FALSE(every.warnings.empty());
}

TEST(MixedPopulation, MeanMatchesExpectedSum) {
  AlphaSequence alpha{AlphaSequence::Kind::power, 0.5, 2};
  auto rep = mixed_population_check(StepLaw::power(3), alpha, 20000, 2000, 4);
  EXPECT_TRUE(rep.warnings.empty());
  double se = std::hypot(rep.stderr_bad_epochs, rep.stderr_expected_bad);
  EXPECT_NEAR(rep.mean_bad_epochs, rep.mean_expected_bad, 4 * se);
}
