#include "arboreal/presets.hpp"

namespace arboreal {

namespace {

std::vector<Element> with_identity(const GroupModel& m) {
  std::vector<Element> a{m.identity()};
  for (const auto& g : m.standard_generators()) a.push_back(g);
  return a;
}

}  // namespace

LadderRecipe ladder_recipe(const std::string& name) {
  if (name == "f2") {
    auto m = GroupModel::free_group(2);
    return {name, m, {1, 1, 1}, {with_identity(m)}, 3};
  }
  if (name == "l2") {
    auto m = GroupModel::lamplighter(2);
    return {name, m, {1, 1, 1}, {with_identity(m)}, 3};
  }
  if (name == "z2z3") {
    auto m = GroupModel::free_product({2, 3});
    return {name, m, {1, 1, 1}, {with_identity(m)}, 3};
  }
  if (name == "z2z3-fast") {
    auto m = GroupModel::free_product({2, 3});
    return {name, m, {0, 1, 4}, {{m.identity()}}, 3};
  }
  throw std::invalid_argument("unknown ladder recipe '" + name + "'");
}

std::vector<std::string> ladder_recipe_names() { return {"f2", "l2", "z2z3", "z2z3-fast"}; }

Scale build_recipe(const LadderRecipe& recipe, BuildLog* log) {
  return build_ladder(recipe.model, recipe.lambda, recipe.filling, recipe.levels, {}, log);
}

Scale colliding_fixture() {
  auto m = GroupModel::free_group(2);
  Element a3 = m.parse_element("a³");
  return make_scale(m, {1}, {{a3, m.inverse(a3)}}, {with_identity(m), {}});
}

}  // namespace arboreal
