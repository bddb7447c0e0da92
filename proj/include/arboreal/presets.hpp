#pragma once

#include <string>
#include <vector>

#include "arboreal/ladder.hpp"

namespace arboreal {

/// Builder inputs for a shipped ladder.
struct LadderRecipe {
  std::string name;
  GroupModel model;
  std::vector<int> lambda;
  std::vector<std::vector<Element>> filling;
  int levels = 0;
};

/// "f2", "l2", "z2z3": three levels with λ ≡ 1 and the standard generators in A_0.
/// "z2z3-fast": A_0 = {e}, λ = (0, 1, 4), which satisfies the fast-growth inequality.
LadderRecipe ladder_recipe(const std::string& name);
std::vector<std::string> ladder_recipe_names();
Scale build_recipe(const LadderRecipe& recipe, BuildLog* log = nullptr);

/// F2 with a ∈ A_0 and Σ_1 = {a³, a⁻³}: a·a³ = a³·a gives two decompositions of a⁴.
Scale colliding_fixture();

}  // namespace arboreal
