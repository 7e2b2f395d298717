#pragma once

#include <map>
#include <string>
#include <utility>

#include "hke/derived_scales.hpp"

// Derived tables are expensive enough to share between test cases.
inline const hke::DerivedScales& derived(const std::string& name, int d = 1) {
  static std::map<std::pair<std::string, int>, hke::DerivedScales> cache;
  const auto key = std::make_pair(name, d);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, hke::build_derived(hke::make_scale(hke::parse_catalog(name)), d)).first;
  }
  return it->second;
}
