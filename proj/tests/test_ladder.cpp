#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "arboreal/ladder.hpp"
#include "arboreal/presets.hpp"
#include "test_support.hpp"

using namespace arboreal;

namespace {

const Scale& f2_ladder() {
  static const Scale s = build_recipe(ladder_recipe("f2"));
  return s;
}

const Scale& fast_ladder() {
  static const Scale s = build_recipe(ladder_recipe("z2z3-fast"));
  return s;
}

auto key(const SpikeDecomposition& d) { return std::tie(d.height, d.prefix, d.spike, d.postfix); }

std::vector<SpikeDecomposition> sorted(std::vector<SpikeDecomposition> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return key(a) < key(b); });
  return v;
}

std::vector<Element> identity_and_gens(const GroupModel& m) {
  std::vector<Element> a{m.identity()};
  for (const auto& g : m.standard_generators()) a.push_back(g);
  return a;
}

}  // namespace

TEST(MakeScale, ValidBuilderOutputWithLinearGauge) {
  auto f2 = GroupModel::free_group(2);
  Scale s = build_ladder(f2, {2, 4}, {identity_and_gens(f2)}, 1);
  EXPECT_EQ(s.horizon(), 1);
  EXPECT_EQ(s.sigma[0].size(), 2u);
  EXPECT_EQ(s.level_of(s.sigma[0][0]), 1);
  EXPECT_TRUE(s.in_sigma(s.sigma[0][1], 1));
  EXPECT_EQ(s.level_of(f2.parse_element("a")), 0);
  EXPECT_EQ(s.level_of(f2.parse_element("a b a b")), -1);
}

TEST(MakeScale, RejectsOverlapsAndMissingIdentity) {
  auto f2 = GroupModel::free_group(2);
  Element b = f2.parse_element("b"), bi = f2.parse_element("b⁻¹");
  Element a2 = f2.parse_element("a²"), a2i = f2.parse_element("a⁻²");
  try {
    make_scale(f2, {1, 1}, {{b, bi}, {b, bi}}, {{f2.identity()}, {}, {}});
    FAIL() << "expected an overlap error";
  } catch (const ScaleError& e) {
    EXPECT_NE(std::string(e.what()).find("overlap: b"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_scale(f2, {1}, {{a2, a2i}}, {{f2.identity(), a2}, {}}), ScaleError);
  EXPECT_THROW(make_scale(f2, {1}, {{b, bi}}, {{f2.parse_element("a"), f2.parse_element("a⁻¹")}, {}}), ScaleError);
  EXPECT_THROW(make_scale(f2, {1}, {{b}}, {{f2.identity()}, {}}), ScaleError);
  EXPECT_THROW(make_scale(f2, {2, 1}, {{b, bi}, {a2, a2i}}, {{f2.identity()}, {}, {}}), ScaleError);
  EXPECT_THROW(make_scale(f2, {1}, {{}}, {{f2.identity()}, {}}), ScaleError);
}

TEST(MakeScale, DeltaFollowsLevels) {
  const Scale& s = f2_ladder();
  EXPECT_EQ(s.delta(1).elements.size(), 5u);
  EXPECT_EQ(s.delta(2).elements.size(), 7u);
  EXPECT_EQ(s.delta(4).elements.size(), 11u);
  EXPECT_THROW(s.delta(5), ScaleError);
}

TEST(Classify, IdentityAndSpikes) {
  const Scale& s = f2_ladder();
  Classifier c(s);
  EXPECT_EQ(c.classify(s.model.identity()).kind, ClassKind::unspiked);
  EXPECT_EQ(c.classify(s.model.identity()).height(), 0);
  for (int n = 1; n <= s.horizon(); ++n)
    for (const auto& sig : s.sigma[static_cast<std::size_t>(n - 1)]) {
      auto cl = c.classify(sig);
      ASSERT_EQ(cl.kind, ClassKind::spiked);
      EXPECT_EQ(cl.decompositions.front(), (SpikeDecomposition{s.model.identity(), sig, s.model.identity(), n}));
      EXPECT_EQ(cl.height(), n);
    }
}

TEST(Classify, KnownDecompositionIsRecoveredUniquely) {
  const Scale& s = f2_ladder();
  Classifier c(s);
  std::mt19937_64 rng(3);
  for (int n = 1; n <= s.horizon(); ++n) {
    const Ball& b = c.gauge_ball(n);
    for (int it = 0; it < 100; ++it) {
      const Element& p = b.elements[rng() % b.size()];
      const Element& q = b.elements[rng() % b.size()];
      const auto& sig = s.sigma[static_cast<std::size_t>(n - 1)];
      const Element& sp = sig[rng() % sig.size()];
      auto cl = c.classify(s.model.multiply(s.model.multiply(p, sp), q));
      ASSERT_EQ(cl.kind, ClassKind::spiked);
      EXPECT_EQ(cl.decompositions.front(), (SpikeDecomposition{p, sp, q, n}));
    }
  }
}

TEST(Classify, CollidingFixtureIsAmbiguous) {
  Scale s = colliding_fixture();
  Classifier c(s);
  auto cl = c.classify(s.model.parse_element("a⁴"));
  EXPECT_EQ(cl.kind, ClassKind::ambiguous);
  EXPECT_GE(cl.decompositions.size(), 2u);
  auto report = check_ladder(s, 3);
  EXPECT_FALSE(report.ambiguous.empty());
  EXPECT_FALSE(report.direct_axioms_hold());
  EXPECT_FALSE(report.sufficient_condition_holds());
}

TEST(Classify, AgreesWithBruteForceOracle) {
  for (const Scale* s : {&f2_ladder(), &fast_ladder()}) {
    Classifier c(*s);
    auto brute = brute_force_decompositions(*s);
    Ball test = ball(s->model, s->delta(s->horizon() + 1), 4);
    for (const auto& g : test.elements) {
      auto it = brute.find(g);
      auto expected = it == brute.end() ? std::vector<SpikeDecomposition>{} : sorted(it->second);
      EXPECT_EQ(sorted(c.spike_decompositions(g)), expected) << s->model.format(g);
    }
  }
  Scale collide = colliding_fixture();
  Classifier c(collide);
  auto brute = brute_force_decompositions(collide);
  for (const auto& [g, decs] : brute) EXPECT_EQ(sorted(c.spike_decompositions(g)), sorted(decs));
}

TEST(Classify, TranslationCovariance) {
  const Scale& s = f2_ladder();
  Classifier c(s);
  Ball test = ball(s.model, s.delta(s.horizon() + 1), 3);
  std::size_t checked = 0;
  for (const auto& g : test.elements) {
    auto cl = c.classify(g);
    if (cl.kind != ClassKind::spiked) continue;
    const auto& d = cl.decompositions.front();
    auto shifted = c.classify(s.model.multiply(s.model.inverse(d.prefix), g));
    ASSERT_EQ(shifted.kind, ClassKind::spiked);
    EXPECT_EQ(shifted.decompositions.front(), (SpikeDecomposition{s.model.identity(), d.spike, d.postfix, d.height}));
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(Classify, OpenHorizonRefusesFarElements) {
  LadderRecipe r = ladder_recipe("f2");
  BuildOptions opts;
  opts.policy = HorizonPolicy::open;
  Scale s = build_ladder(r.model, r.lambda, r.filling, r.levels, opts);
  Classifier c(s);
  EXPECT_EQ(c.classify(s.model.parse_element("a b")).kind, ClassKind::unspiked);
  EXPECT_EQ(c.classify(s.sigma[2][0]).kind, ClassKind::spiked);
  EXPECT_THROW(c.classify(s.model.power(s.sigma[2][0], 4)), HorizonError);
}

TEST(CheckLadder, BuilderOutputPasses) {
  for (const char* name : {"f2", "z2z3-fast"}) {
    Scale s = build_recipe(ladder_recipe(name));
    auto report = check_ladder(s, 3);
    EXPECT_TRUE(report.direct_axioms_hold()) << name;
    EXPECT_TRUE(report.sufficient_condition_holds()) << name;
    EXPECT_TRUE(report.escape_condition_holds()) << name;
    for (const auto& lc : report.levels) {
      EXPECT_TRUE(lc.switching_by_products);
      EXPECT_GE(lc.escape_radius, 5 * lc.lambda) << name << " level " << lc.n;
    }
    EXPECT_EQ(report.spiked + report.unspiked, report.ball_size);
  }
}

TEST(CheckLadder, EscapeImpliesSpikesAreLong) {
  const Scale& s = f2_ladder();
  for (int n = 1; n <= s.horizon(); ++n)
    for (const auto& sig : s.sigma[static_cast<std::size_t>(n - 1)])
      EXPECT_FALSE(bounded_length(s.model, sig, s.delta(n), 3 * s.gauge(n)).has_value());
}

TEST(BuildLadder, ZeroLevelsLeavesEverythingUnspiked) {
  auto f2 = GroupModel::free_group(2);
  Scale s = build_ladder(f2, {}, {identity_and_gens(f2)}, 0);
  EXPECT_EQ(s.horizon(), 0);
  Classifier c(s);
  for (const auto& g : ball(f2, s.delta(1), 3).elements) EXPECT_EQ(c.classify(g).kind, ClassKind::unspiked);
}

TEST(BuildLadder, LamplighterRecipeIsValid) {
  Scale s = build_recipe(ladder_recipe("l2"));
  auto report = check_ladder(s, 3);
  EXPECT_TRUE(report.direct_axioms_hold());
  EXPECT_TRUE(report.sufficient_condition_holds());
}

TEST(BuildLadder, CapacityErrorNamesLevel) {
  auto r = ladder_recipe("f2");
  BuildOptions opts;
  opts.ball_budget = 1000;
  try {
    build_ladder(r.model, r.lambda, r.filling, r.levels, opts);
    FAIL() << "expected a capacity error";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("level 2"), std::string::npos) << e.what();
  }
}

TEST(BuildLadder, RandomizedRunsSatisfySufficientConditionAndAxioms) {
  std::mt19937_64 rng(2024);
  for (int run = 0; run < 4; ++run) {
    auto models = fixtures::all_models();
    const GroupModel& m = models[rng() % models.size()];
    std::vector<Element> a0{m.identity()};
    Element extra = fixtures::random_element(m, rng, 3);
    if (!m.is_identity(extra)) a0 = GeneratingSet::symmetrized(m, {m.identity(), extra}).elements;
    Scale s = build_ladder(m, {1, 1}, {a0}, 2);
    auto report = check_ladder(s, 3);
    EXPECT_TRUE(report.sufficient_condition_holds()) << m.name();
    EXPECT_TRUE(report.direct_axioms_hold()) << m.name();
  }
}

TEST(FastGrowth, Examples) {
  std::vector<int> four{4, 16, 64, 256, 1024};
  EXPECT_TRUE(fast_growth_check(four));
  EXPECT_FALSE(fast_growth_check({1, 2, 3, 4}));
  EXPECT_FALSE(fast_growth_check({1, 1, 1}));
  EXPECT_TRUE(fast_growth_check({0, 1, 4}));
  EXPECT_THROW(fast_growth_check({1}), std::invalid_argument);
}

TEST(Serialization, RoundTripsBitExactly) {
  for (const auto& name : ladder_recipe_names()) {
    Scale s = build_recipe(ladder_recipe(name));
    std::string text = serialize_scale(s);
    Scale back = parse_scale(text);
    EXPECT_EQ(serialize_scale(back), text) << name;
    EXPECT_EQ(back.sigma, s.sigma);
    EXPECT_EQ(back.filling, s.filling);
    EXPECT_EQ(back.lambda, s.lambda);
  }
  std::string collide = serialize_scale(colliding_fixture());
  EXPECT_EQ(serialize_scale(parse_scale(collide)), collide);
}

TEST(Serialization, ErrorsNameTheLine) {
  try {
    parse_scale("arboreal-scale 1\ngroup F2\nhorizon 0\ngauge\nfilling 0 : e ; q⁻\n");
    FAIL() << "expected a parse failure";
  } catch (const ScaleError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}
