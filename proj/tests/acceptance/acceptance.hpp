#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hke::acceptance {

struct Options {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double path_scale = 1.0;
  double density_threshold = 10.0;
  double exit_threshold = 4.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool met = false;  // the numeric criterion alone
  bool pass = false;  // met and within the runtime budget
  std::string measured;
  std::string required;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  nlohmann::json details;
};

void to_json(nlohmann::json& j, const CriterionResult& r);

/// all, quick, calculus, oracles, cauchy-oracle, sandwich, exits, green, lil,
/// bands, or a single criterion "ac<N>". Unknown names throw ConfigInvalid.
std::vector<int> preset_criteria(const std::string& preset);

CriterionResult run_criterion(int id, const Options& opt);

/// One line: "AC<N> PASS|FAIL <name>: <measured> (need <required>) [<s>/<budget> s]".
std::string format_line(const CriterionResult& r);

}  // namespace hke::acceptance
