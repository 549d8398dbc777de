#include "nnr/objectives.hpp"

namespace nnr {

std::string to_string(Objective objective) { return objective == Objective::ce ? "ce" : "scl"; }

Objective parse_objective(const std::string& name) {
  if (name == "ce") return Objective::ce;
  if (name == "scl") return Objective::scl;
  throw ConfigError("unknown objective: " + name);
}

}  // namespace nnr
