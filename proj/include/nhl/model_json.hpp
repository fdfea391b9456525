#pragma once

// JSON (de)serialization of models and the config conventions shared by the
// command-line tool: explicit ModelSpec documents, named model families, and
// dotted-path overrides.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nhl/lattice.hpp"
#include "nhl/models.hpp"

namespace nhl {

using json = nlohmann::json;

// Malformed configuration; path is a JSON-pointer-like location ("/model/L").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace cfg {

inline std::string join(const std::string& base, const std::string& key) { return base + "/" + key; }
inline std::string join(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

inline double number(const json& j, const std::string& key, const std::string& path) {
  return number(field(j, key, path), join(path, key));
}

inline double number_or(const json& j, const std::string& key, double dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  return number(j.at(key), join(path, key));
}

inline std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline std::size_t count(const json& j, const std::string& key, const std::string& path) {
  return count(field(j, key, path), join(path, key));
}

inline std::size_t count_or(const json& j, const std::string& key, std::size_t dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  return count(j.at(key), join(path, key));
}

inline std::string text(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  return v.get<std::string>();
}

inline bool flag_or(const json& j, const std::string& key, bool dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_boolean()) throw ConfigError(join(path, key), "expected a boolean");
  return j.at(key).get<bool>();
}

}  // namespace cfg

inline json to_json(const ModelSpec& s) {
  json j;
  j["L"] = s.L;
  j["boundary"] = to_string(s.boundary);
  json hops = json::array();
  for (const auto& [n, t] : s.hoppings.terms()) hops.push_back({{"range", n}, {"re", t.real()}, {"im", t.imag()}});
  j["hoppings"] = hops;
  j["flux_theta"] = s.flux_theta;
  if (s.twist != 0.0) j["twist"] = s.twist;
  json pert = json::array();
  for (const auto& p : s.perturbations)
    pert.push_back({{"i", p.site_i}, {"j", p.site_j}, {"re", p.amplitude.real()}, {"im", p.amplitude.imag()}});
  j["perturbations"] = pert;
  return j;
}

// Parses an explicit ModelSpec document; errors carry the offending path.
inline ModelSpec model_from_json(const json& j, const std::string& path = "") {
  using namespace cfg;
  ModelSpec s;
  s.L = count(j, "L", path);
  const std::string b = text(j, "boundary", path);
  if (b == "open" || b == "Open") {
    s.boundary = Boundary::Open;
  } else if (b == "periodic" || b == "Periodic") {
    s.boundary = Boundary::Periodic;
  } else {
    throw ConfigError(join(path, "boundary"), "expected \"open\" or \"periodic\", got \"" + b + "\"");
  }
  const json& hops = field(j, "hoppings", path);
  const std::string hp = join(path, "hoppings");
  if (!hops.is_array() || hops.empty()) throw ConfigError(hp, "expected a non-empty array");
  for (std::size_t k = 0; k < hops.size(); ++k) {
    const std::string ep = join(hp, k);
    const json& h = hops[k];
    const json& rj = field(h, "range", ep);
    if (!rj.is_number_integer() || rj.get<long long>() < 1) throw ConfigError(join(ep, "range"), "expected an integer >= 1");
    const int range = rj.get<int>();
    if (s.hoppings[range] != cplx{}) throw ConfigError(join(ep, "range"), "duplicate hopping range");
    const cplx t{number(h, "re", ep), number_or(h, "im", 0.0, ep)};
    if (t == cplx{}) throw ConfigError(ep, "hopping amplitude must be nonzero");
    s.hoppings.set(range, t);
  }
  s.flux_theta = wrap_angle(number_or(j, "flux_theta", 0.0, path));
  s.twist = wrap_angle(number_or(j, "twist", 0.0, path));
  if (j.contains("perturbations")) {
    const json& ps = j.at("perturbations");
    const std::string pp = join(path, "perturbations");
    if (!ps.is_array()) throw ConfigError(pp, "expected an array");
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const std::string ep = join(pp, k);
      PerturbationTerm t;
      t.site_i = count(ps[k], "i", ep);
      t.site_j = count(ps[k], "j", ep);
      t.amplitude = {number_or(ps[k], "re", 0.0, ep), number_or(ps[k], "im", 0.0, ep)};
      if (t.site_i < 1 || t.site_i > s.L) throw ConfigError(join(ep, "i"), "site outside 1..L");
      if (t.site_j < 1 || t.site_j > s.L) throw ConfigError(join(ep, "j"), "site outside 1..L");
      s.perturbations.push_back(t);
    }
  }
  const int M = s.hoppings.max_range();
  if (s.L <= 2 * static_cast<std::size_t>(M))
    throw ConfigError(join(path, "L"), "L must exceed twice the largest hopping range");
  return s;
}

// A config names its model in one of three ways:
//   {"model": {ModelSpec}}                      explicit, nested
//   {"family": "gain_chain" | "flux_ring" | "nnn_chain", ...parameters}
//   {ModelSpec fields at top level}
// Family parameters:
//   gain_chain: L, t (1), g
//   flux_ring:  L, t (1), g, phi, and theta or flux (= L theta)
//   nnn_chain:  L, t1 (1), t2, g, potential ("antisymmetric" | "symmetric")
inline ModelSpec model_from_config(const json& j, const std::string& path = "") {
  using namespace cfg;
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "config must be a JSON object");
  if (j.contains("model")) return model_from_json(j.at("model"), join(path, "model"));
  if (!j.contains("family")) return model_from_json(j, path);
  const std::string fam = text(j, "family", path);
  const std::size_t L = count(j, "L", path);
  if (fam == "gain_chain") {
    if (L < 3) throw ConfigError(join(path, "L"), "L must be at least 3");
    return gain_chain(L, number_or(j, "t", 1.0, path), number(j, "g", path));
  }
  if (fam == "flux_ring") {
    if (L < 3) throw ConfigError(join(path, "L"), "L must be at least 3");
    FluxRingParams p;
    p.L = L;
    p.t = number_or(j, "t", 1.0, path);
    p.g = number(j, "g", path);
    p.phi = number(j, "phi", path);
    if (j.contains("theta") && j.contains("flux")) throw ConfigError(join(path, "flux"), "give theta or flux, not both");
    if (j.contains("flux")) {
      p.theta = number(j, "flux", path) / static_cast<double>(L);
    } else {
      p.theta = number_or(j, "theta", 0.0, path);
    }
    return flux_ring(p);
  }
  if (fam == "nnn_chain") {
    if (L < 5) throw ConfigError(join(path, "L"), "L must be at least 5");
    EdgePotential kind = EdgePotential::Antisymmetric;
    if (j.contains("potential")) {
      const std::string k = text(j, "potential", path);
      if (k == "symmetric") {
        kind = EdgePotential::Symmetric;
      } else if (k != "antisymmetric") {
        throw ConfigError(join(path, "potential"), "expected \"antisymmetric\" or \"symmetric\"");
      }
    }
    return nnn_chain(L, number_or(j, "t1", 1.0, path), number(j, "t2", path), number(j, "g", path), kind);
  }
  throw ConfigError(join(path, "family"), "unknown model family \"" + fam + "\"");
}

// Splits "a.b.0.c" into segments.
inline std::vector<std::string> split_path(const std::string& key) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : key) {
    if (c == '.') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Applies "key=value": key is a dotted path into the document (array
// elements by index), value is parsed as JSON and otherwise kept as a string.
// The parent of the leaf must exist.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("/", "override \"" + assignment + "\" is not KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  if (key.find('/') != std::string::npos)
    throw ConfigError("/", "override key \"" + key + "\" uses '/'; separate path segments with '.'");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  const auto segs = split_path(key);
  json* node = &doc;
  std::string path;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const std::string& s = segs[k];
    if (s.empty()) throw ConfigError(path + "/", "empty segment in override key \"" + key + "\"");
    const bool last = k + 1 == segs.size();
    path += "/" + s;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw ConfigError(path, "array index expected");
      }
      if (idx >= node->size()) throw ConfigError(path, "array index out of range");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!last && !node->contains(s)) throw ConfigError(path, "no such field");
      node = &(*node)[s];
    } else {
      throw ConfigError(path, "cannot descend into a scalar");
    }
    if (last) *node = value;
  }
}

}  // namespace nhl
