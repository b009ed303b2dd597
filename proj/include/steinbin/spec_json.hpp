#pragma once

// JSON documents for the bound specs. Every document carries "kind", one of
// independent | local | point_process | decomposable; unknown keys are
// rejected and errors name the offending field.
//
//   independent:   {"kind", "summands": [{"probs": [...], "min_index", "anchor"}]}
//   local:         {"kind", "sigma2", "anchor",
//                   "terms": [{"m_xi_eta2", "m_xi_eta_tau", "m_cov", "m_tau", "c1", "c2"}]}
//   point_process: {"kind", "mu_total", "sigma2", "anchor",
//                   "terms": [{"weight"?, "palm_prod", "plain_prod", "mu_A", "mu_B",
//                              "palm_B", "c1", "c2"}]}
//                  "weight" may be omitted only for a single (homogeneous) term,
//                  which then carries weight mu_total.
//   decomposable:  {"kind", "sigma2", "anchor",
//                   "terms": [{"m_xi_Z2", "c1", "c2",
//                              "parts": [{"m_xi_Z_V", "m_cov", "m_ZV"}]}]}

#include <initializer_list>
#include <istream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "steinbin/lattice_dist.hpp"
#include "steinbin/stein_bounds.hpp"

namespace steinbin {

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using AnySpec = std::variant<IndependentSummandSpec, LocalDependenceSpec, PointProcessSpec, DecomposableSpec>;

inline const char* spec_kind(const AnySpec& s) {
  switch (s.index()) {
    case 0: return "independent";
    case 1: return "local";
    case 2: return "point_process";
    default: return "decomposable";
  }
}

namespace detail {

using json = nlohmann::ordered_json;

inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SpecError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw SpecError(path + (path.empty() ? "" : ".") + it.key() + ": unknown key");
  }
}

inline const json& field(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SpecError(path + (path.empty() ? "" : ".") + key + ": missing");
  return *it;
}

inline double number(const json& j, const std::string& path, const char* key) {
  const json& v = field(j, path, key);
  if (!v.is_number()) throw SpecError(path + (path.empty() ? "" : ".") + key + ": expected a number");
  return v.get<double>();
}

inline const json& array(const json& j, const std::string& path, const char* key) {
  const json& v = field(j, path, key);
  if (!v.is_array()) throw SpecError(path + (path.empty() ? "" : ".") + key + ": expected an array");
  return v;
}

inline std::string at(const std::string& path, const char* key, std::size_t i) {
  return path + (path.empty() ? "" : ".") + key + "[" + std::to_string(i) + "]";
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const AnySpec& spec) {
  using detail::json;
  json j;
  j["kind"] = spec_kind(spec);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IndependentSummandSpec>) {
          json arr = json::array();
          for (const auto& x : s.summands)
            arr.push_back({{"probs", x.probs()}, {"min_index", x.min_index()}, {"anchor", x.offset()}});
          j["summands"] = arr;
        } else if constexpr (std::is_same_v<T, LocalDependenceSpec>) {
          j["sigma2"] = s.sigma2;
          j["anchor"] = s.anchor;
          json arr = json::array();
          for (const auto& t : s.terms)
            arr.push_back({{"m_xi_eta2", t.m_xi_eta2},
                           {"m_xi_eta_tau", t.m_xi_eta_tau},
                           {"m_cov", t.m_cov},
                           {"m_tau", t.m_tau},
                           {"c1", t.c1},
                           {"c2", t.c2}});
          j["terms"] = arr;
        } else if constexpr (std::is_same_v<T, PointProcessSpec>) {
          j["mu_total"] = s.mu_total;
          j["sigma2"] = s.sigma2;
          j["anchor"] = s.anchor;
          json arr = json::array();
          for (const auto& t : s.terms)
            arr.push_back({{"weight", t.weight},
                           {"palm_prod", t.palm_prod},
                           {"plain_prod", t.plain_prod},
                           {"mu_A", t.mu_A},
                           {"mu_B", t.mu_B},
                           {"palm_B", t.palm_B},
                           {"c1", t.c1},
                           {"c2", t.c2}});
          j["terms"] = arr;
        } else {
          j["sigma2"] = s.sigma2;
          j["anchor"] = s.anchor;
          json arr = json::array();
          for (const auto& t : s.terms) {
            json parts = json::array();
            for (const auto& p : t.parts)
              parts.push_back({{"m_xi_Z_V", p.m_xi_Z_V}, {"m_cov", p.m_cov}, {"m_ZV", p.m_ZV}});
            arr.push_back({{"m_xi_Z2", t.m_xi_Z2}, {"c1", t.c1}, {"c2", t.c2}, {"parts", parts}});
          }
          j["terms"] = arr;
        }
      },
      spec);
  return j;
}

inline AnySpec spec_from_json(const nlohmann::ordered_json& j) {
  using detail::json;
  if (!j.is_object()) throw SpecError("document: expected a JSON object");
  const json& kind_v = detail::field(j, "", "kind");
  if (!kind_v.is_string()) throw SpecError("kind: expected a string");
  const std::string kind = kind_v.get<std::string>();

  if (kind == "independent") {
    detail::only_keys(j, "", {"kind", "summands"});
    IndependentSummandSpec s;
    const json& arr = detail::array(j, "", "summands");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = detail::at("", "summands", i);
      detail::only_keys(arr[i], p, {"probs", "min_index", "anchor"});
      const json& probs = detail::array(arr[i], p, "probs");
      std::vector<double> v;
      for (std::size_t k = 0; k < probs.size(); ++k) {
        if (!probs[k].is_number()) throw SpecError(detail::at(p, "probs", k) + ": expected a number");
        v.push_back(probs[k].get<double>());
      }
      std::int64_t lo = 0;
      if (arr[i].contains("min_index")) {
        if (!arr[i]["min_index"].is_number_integer()) throw SpecError(p + ".min_index: expected an integer");
        lo = arr[i]["min_index"].get<std::int64_t>();
      }
      const double anchor = arr[i].contains("anchor") ? detail::number(arr[i], p, "anchor") : 0.0;
      try {
        s.summands.push_back(LatticePMF::from_probs(std::move(v), lo, anchor));
      } catch (const std::invalid_argument& e) {
        throw SpecError(p + ": " + e.what());
      }
    }
    return s;
  }
  if (kind == "local") {
    detail::only_keys(j, "", {"kind", "sigma2", "anchor", "terms"});
    LocalDependenceSpec s;
    s.sigma2 = detail::number(j, "", "sigma2");
    s.anchor = j.contains("anchor") ? detail::number(j, "", "anchor") : 0.0;
    const json& arr = detail::array(j, "", "terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = detail::at("", "terms", i);
      detail::only_keys(arr[i], p, {"m_xi_eta2", "m_xi_eta_tau", "m_cov", "m_tau", "c1", "c2"});
      LocalTerm t;
      t.m_xi_eta2 = detail::number(arr[i], p, "m_xi_eta2");
      t.m_xi_eta_tau = detail::number(arr[i], p, "m_xi_eta_tau");
      t.m_cov = detail::number(arr[i], p, "m_cov");
      t.m_tau = detail::number(arr[i], p, "m_tau");
      t.c1 = detail::number(arr[i], p, "c1");
      t.c2 = detail::number(arr[i], p, "c2");
      s.terms.push_back(t);
    }
    return s;
  }
  if (kind == "point_process") {
    detail::only_keys(j, "", {"kind", "mu_total", "sigma2", "anchor", "terms"});
    PointProcessSpec s;
    s.mu_total = detail::number(j, "", "mu_total");
    s.sigma2 = detail::number(j, "", "sigma2");
    s.anchor = j.contains("anchor") ? detail::number(j, "", "anchor") : 0.0;
    const json& arr = detail::array(j, "", "terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = detail::at("", "terms", i);
      detail::only_keys(arr[i], p, {"weight", "palm_prod", "plain_prod", "mu_A", "mu_B", "palm_B", "c1", "c2"});
      PointProcessTerm t;
      if (arr[i].contains("weight")) {
        t.weight = detail::number(arr[i], p, "weight");
      } else if (arr.size() == 1) {
        t.weight = s.mu_total;
      } else {
        throw SpecError(p + ".weight: missing (required when there is more than one term)");
      }
      t.palm_prod = detail::number(arr[i], p, "palm_prod");
      t.plain_prod = detail::number(arr[i], p, "plain_prod");
      t.mu_A = detail::number(arr[i], p, "mu_A");
      t.mu_B = detail::number(arr[i], p, "mu_B");
      t.palm_B = detail::number(arr[i], p, "palm_B");
      t.c1 = detail::number(arr[i], p, "c1");
      t.c2 = detail::number(arr[i], p, "c2");
      s.terms.push_back(t);
    }
    return s;
  }
  if (kind == "decomposable") {
    detail::only_keys(j, "", {"kind", "sigma2", "anchor", "terms"});
    DecomposableSpec s;
    s.sigma2 = detail::number(j, "", "sigma2");
    s.anchor = j.contains("anchor") ? detail::number(j, "", "anchor") : 0.0;
    const json& arr = detail::array(j, "", "terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = detail::at("", "terms", i);
      detail::only_keys(arr[i], p, {"m_xi_Z2", "c1", "c2", "parts"});
      DecomposableTerm t;
      t.m_xi_Z2 = detail::number(arr[i], p, "m_xi_Z2");
      t.c1 = detail::number(arr[i], p, "c1");
      t.c2 = detail::number(arr[i], p, "c2");
      const json& parts = detail::array(arr[i], p, "parts");
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::string pk = detail::at(p, "parts", k);
        detail::only_keys(parts[k], pk, {"m_xi_Z_V", "m_cov", "m_ZV"});
        t.parts.push_back({detail::number(parts[k], pk, "m_xi_Z_V"), detail::number(parts[k], pk, "m_cov"),
                           detail::number(parts[k], pk, "m_ZV")});
      }
      s.terms.push_back(std::move(t));
    }
    return s;
  }
  throw SpecError("kind: unknown spec kind '" + kind + "'");
}

inline AnySpec read_spec(std::istream& is) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("document: not valid JSON (") + e.what() + ")");
  }
  return spec_from_json(j);
}

// Bound of the spec for l = 1, 2, whatever its kind.
inline BoundReport bound_for(const AnySpec& spec, int l) {
  return std::visit(
      [&](const auto& s) -> BoundReport {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IndependentSummandSpec>) return bound_theorem_2_1(s, l);
        else if constexpr (std::is_same_v<T, LocalDependenceSpec>) return bound_theorem_3_1(s, l);
        else if constexpr (std::is_same_v<T, PointProcessSpec>) return bound_corollary_3_4(s, l);
        else return bound_theorem_6_1(s, l);
      },
      spec);
}

}  // namespace steinbin
