#include <gtest/gtest.h>

#include <random>

#include "arboreal/switchers.hpp"
#include "test_support.hpp"

using namespace arboreal;

namespace {

constexpr int kIterations = 200;

/// Positive words of length 1..3 whose first letter is `first`.
std::vector<Element> positive_words(const GroupModel& f2, int first) {
  std::vector<Element> out;
  std::vector<std::vector<int>> words{{first}};
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() < 3)
      for (int l : {1, 2}) {
        auto w = words[i];
        w.push_back(l);
        words.push_back(w);
      }
  }
  for (const auto& w : words) out.push_back(Element{f2.tag(), std::vector<std::int32_t>(w.begin(), w.end())});
  return out;
}

FiniteSet set_of(const GroupModel& m, std::initializer_list<const char*> items) {
  FiniteSet s;
  for (const char* t : items) s.insert(m.parse_element(t));
  return s;
}

}  // namespace

TEST(SwitchingSet, TrivialZAcceptsAnySigma) {
  for (const auto& m : fixtures::all_models()) {
    std::mt19937_64 rng(7);
    std::vector<Element> sigma;
    while (sigma.size() < 4) {
      Element g = fixtures::random_element(m, rng);
      if (!m.is_identity(g)) sigma.push_back(g);
    }
    EXPECT_TRUE(is_switching_set(m, sigma, FiniteSet({m.identity()})).holds) << m.name();
  }
}

TEST(SwitchingSet, PositiveWordCones) {
  auto f2 = GroupModel::free_group(2);
  auto sigma = positive_words(f2, 1);
  FiniteSet z(positive_words(f2, 2));
  EXPECT_EQ(sigma.size(), 7u);
  EXPECT_TRUE(is_switching_set(f2, sigma, z).holds);
  EXPECT_TRUE(is_switching_set_by_products(f2, sigma, z));
}

TEST(SwitchingSet, CommutingPowersFailWithWitness) {
  auto f2 = GroupModel::free_group(2);
  std::vector<Element> sigma{f2.parse_element("a²")};
  auto r = is_switching_set(f2, sigma, set_of(f2, {"e", "a"}));
  ASSERT_FALSE(r.holds);
  const auto& w = *r.witness;
  EXPECT_EQ(f2.multiply(w.sigma, w.z), f2.multiply(w.z_prime, w.sigma_prime));
  EXPECT_EQ(f2.format(w.z), "a");
  EXPECT_EQ(f2.format(w.z_prime), "a");
  EXPECT_FALSE(is_switching_set_by_products(f2, sigma, set_of(f2, {"e", "a"})));
}

TEST(SwitchingSet, RejectsIdentityInSigma) {
  auto f2 = GroupModel::free_group(2);
  EXPECT_THROW(is_switching_set(f2, {f2.identity()}, FiniteSet({f2.identity()})), std::invalid_argument);
}

TEST(Superswitching, Examples) {
  auto f2 = GroupModel::free_group(2);
  auto z = set_of(f2, {"e", "a", "a⁻¹"});
  EXPECT_TRUE(is_superswitching(f2, f2.parse_element("b"), z).holds);
  auto bad = is_superswitching(f2, f2.parse_element("a"), z);
  ASSERT_FALSE(bad.holds);
  EXPECT_EQ(bad.witness->epsilon, -1);
  EXPECT_TRUE(is_superswitching(f2, f2.parse_element("a"), FiniteSet({f2.identity()})).holds);
}

TEST(Superswitching, InvolutionAllowedOnlyThroughTrivialSquare) {
  auto g = GroupModel::free_product({2, 3});
  Element x = g.parse_element("x");
  EXPECT_TRUE(is_superswitching(g, x, FiniteSet({g.identity()})).holds);
  // y² = y⁻¹ lies in Z, so y fails even though Z is tiny.
  EXPECT_FALSE(is_superswitching(g, g.parse_element("y"), set_of(g, {"e", "y⁻¹"})).holds);
}

TEST(Superswitching, TrivialZReturnsFirstCandidate) {
  for (const auto& m : fixtures::all_models()) {
    auto cert = find_superswitcher(m, FiniteSet({m.identity()}), {});
    EXPECT_EQ(cert.sigma, m.standard_generators().front()) << m.name();
    EXPECT_EQ(cert.word_length, 1);
  }
}

TEST(Superswitching, SearchResultsPassIndependentChecks) {
  for (const auto& m : fixtures::all_models()) {
    auto gens = GeneratingSet::symmetrized(m, m.standard_generators());
    Ball z = ball(m, gens, 1);
    auto cert = find_superswitcher(m, z, {}, true);
    Element inv = m.inverse(cert.sigma);
    EXPECT_FALSE(z.contains(cert.sigma)) << m.name();
    EXPECT_FALSE(z.contains(inv)) << m.name();
    std::vector<Element> pair{cert.sigma};
    if (inv != cert.sigma) pair.push_back(inv);
    EXPECT_TRUE(is_switching_set(m, pair, z).holds) << m.name();
    EXPECT_TRUE(is_switching_set_by_products(m, pair, z)) << m.name();
    EXPECT_TRUE(is_switching_set(m, {cert.sigma}, z).holds) << m.name();
    ASSERT_FALSE(cert.log.empty());
    EXPECT_EQ(cert.log.back().rfind("accept", 0), 0u);
    EXPECT_EQ(cert.log.size(), cert.candidates_rejected + 1);
  }
}

TEST(Superswitching, ExhaustiveOracleOverZ) {
  auto f2 = GroupModel::free_group(2);
  Ball z = ball(f2, GeneratingSet::symmetrized(f2, f2.standard_generators()), 1);
  auto cert = find_superswitcher(f2, z, {});
  Element inv = f2.inverse(cert.sigma);
  for (const auto& x : z.elements)
    for (const auto& y : z.elements)
      for (const auto& rhs : {f2.multiply(f2.multiply(cert.sigma, x), inv), f2.multiply(f2.multiply(cert.sigma, x), cert.sigma)}) {
        if (rhs == y) EXPECT_TRUE(f2.is_identity(x) && f2.is_identity(y));
      }
}

TEST(Superswitching, MonotoneUnderShrinkingZ) {
  std::mt19937_64 rng(11);
  for (const auto& m : fixtures::all_models()) {
    auto gens = GeneratingSet::symmetrized(m, m.standard_generators());
    Ball z = ball(m, gens, 2);
    auto cert = find_superswitcher(m, z, {});
    for (int it = 0; it < kIterations; ++it) {
      FiniteSet sub({m.identity()});
      for (const auto& g : z.elements)
        if (rng() % 2) sub.insert(g);
      EXPECT_TRUE(is_superswitching(m, cert.sigma, sub).holds) << m.name();
    }
  }
}

TEST(Superswitching, DecisionAgreesWithSetForm) {
  std::mt19937_64 rng(5);
  for (const auto& m : fixtures::all_models()) {
    auto gens = GeneratingSet::symmetrized(m, m.standard_generators());
    Ball z = ball(m, gens, 2);
    for (int it = 0; it < kIterations; ++it) {
      Element s = fixtures::random_element(m, rng, 5);
      if (m.is_identity(s)) continue;
      Element inv = m.inverse(s);
      std::vector<Element> pair{s};
      if (inv != s) pair.push_back(inv);
      bool super = is_superswitching(m, s, z).holds;
      EXPECT_EQ(super, is_switching_set(m, pair, z).holds) << m.format(s);
      EXPECT_EQ(super, is_switching_set_by_products(m, pair, z)) << m.format(s);
    }
  }
}

TEST(Superswitching, BudgetErrorReportsFrontier) {
  auto f2 = GroupModel::free_group(2);
  Ball z = ball(f2, GeneratingSet::symmetrized(f2, f2.standard_generators()), 3);
  SearchPolicy policy;
  policy.budget = 10;
  try {
    find_superswitcher(f2, z, policy);
    FAIL() << "expected a capacity error";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("frontier"), std::string::npos);
  }
}

TEST(Superswitching, ExcludedCandidatesAreSkipped) {
  auto f2 = GroupModel::free_group(2);
  SearchPolicy policy;
  policy.exclude = FiniteSet({f2.parse_element("a⁻¹")});
  auto cert = find_superswitcher(f2, FiniteSet({f2.identity()}), policy);
  EXPECT_EQ(f2.format(cert.sigma), "b");
}
