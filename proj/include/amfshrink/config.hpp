#pragma once

// Experiment configuration and its JSON form. The grammar is documented in
// docs/config-format.md.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "amfshrink/estimators.hpp"
#include "amfshrink/matrix_io.hpp"
#include "amfshrink/population.hpp"
#include "amfshrink/sampling.hpp"

namespace amfshrink {

struct EstimatorSpec {
  enum class Method { Lw, DiagonalLoading, Sample, Oracle, Clairvoyant };
  Method method = Method::Lw;
  LwOptions lw;
  std::optional<double> beta;  // absolute diagonal load
  double beta_scale = 0.1;     // load = beta_scale * tr(S)/p when beta is absent
  std::string label;
};

inline std::string_view method_name(EstimatorSpec::Method m) {
  switch (m) {
    case EstimatorSpec::Method::Lw: return "lw";
    case EstimatorSpec::Method::DiagonalLoading: return "diagonal-loading";
    case EstimatorSpec::Method::Sample: return "sample";
    case EstimatorSpec::Method::Oracle: return "oracle";
    case EstimatorSpec::Method::Clairvoyant: return "clairvoyant";
  }
  return "?";
}

inline EstimatorSpec::Method parse_method(std::string_view s) {
  using M = EstimatorSpec::Method;
  if (s == "lw") return M::Lw;
  if (s == "diagonal-loading" || s == "diag") return M::DiagonalLoading;
  if (s == "sample") return M::Sample;
  if (s == "oracle") return M::Oracle;
  if (s == "clairvoyant") return M::Clairvoyant;
  throw DataError("unknown estimator method '" + std::string(s) + "'");
}

inline UpperClip parse_upper_clip(std::string_view s) {
  if (s == "sample-max") return UpperClip::SampleMax;
  if (s == "mp-edge") return UpperClip::MpEdge;
  throw DataError("unknown upper_clip '" + std::string(s) + "' (sample-max | mp-edge)");
}

inline std::string_view to_string(UpperClip c) {
  return c == UpperClip::SampleMax ? "sample-max" : "mp-edge";
}

inline LwFormula parse_lw_formula(std::string_view s) {
  if (s == "full-spectrum") return LwFormula::FullSpectrum;
  if (s == "nonzero-only") return LwFormula::NonzeroOnly;
  throw DataError("unknown formula '" + std::string(s) + "' (full-spectrum | nonzero-only)");
}

inline std::string_view to_string(LwFormula f) {
  return f == LwFormula::FullSpectrum ? "full-spectrum" : "nonzero-only";
}

/// Amplitude of the signal under H1: either a fixed value, or chosen per
/// replicate and estimator so that |a| (mu' R^-1 mu)^{1/2} equals `value`.
struct AmplitudeSpec {
  enum class Mode { Fixed, Deflection };
  Mode mode = Mode::Fixed;
  double value = 1.0;
};

struct SizeCell {
  Index p = 0;
  Index n = 0;
  friend bool operator==(const SizeCell&, const SizeCell&) = default;
};

struct ExperimentConfig {
  Field field = Field::Complex;
  SpectrumModel spectrum;
  bool rotate = true;
  std::vector<SizeCell> sizes;
  EntryLaw entry_law;
  AmplitudeSpec amplitude;
  std::vector<double> alphas{0.1};
  std::vector<EstimatorSpec> estimators;
  long replicates = 1;
  long trials = 10000;
  Seed master_seed = 0;

  void validate() const {
    if (spectrum.empty()) throw DataError("config: spectrum is empty");
    if (sizes.empty()) throw DataError("config: no sizes");
    for (const auto& c : sizes)
      if (c.p < 1 || c.n < 1) throw DataError("config: sizes must be positive");
    entry_law.validate();
    if (alphas.empty()) throw DataError("config: no alpha levels");
    for (double a : alphas)
      if (!(a > 0.0 && a < 1.0)) throw DataError("config: alpha must lie in (0,1)");
    if (estimators.empty()) throw DataError("config: estimator list is empty");
    if (replicates < 1) throw DataError("config: replicates must be >= 1");
    if (trials < 1) throw DataError("config: trials must be >= 1");
    if (!(amplitude.value != 0.0) || !std::isfinite(amplitude.value))
      throw DataError("config: amplitude must be finite and nonzero");
  }
};

/// A cell is usable unless p/n falls in the excluded band around 1.
inline bool cell_aspect_ok(const SizeCell& c) {
  const double ratio = static_cast<double>(c.p) / static_cast<double>(c.n);
  return !(ratio > 0.95 && ratio < 1.05);
}

inline std::string default_label(const EstimatorSpec& e) {
  std::string s(method_name(e.method));
  if (e.method == EstimatorSpec::Method::Lw) {
    if (e.lw.t0 > 0.0) s += "(t0=" + detail::format_double(e.lw.t0) + ")";
    if (e.lw.upper_clip != UpperClip::SampleMax) s += "[clip=" + std::string(to_string(e.lw.upper_clip)) + "]";
    if (e.lw.formula != LwFormula::FullSpectrum) s += "[formula=" + std::string(to_string(e.lw.formula)) + "]";
  } else if (e.method == EstimatorSpec::Method::DiagonalLoading) {
    s += e.beta ? "(beta=" + detail::format_double(*e.beta) + ")"
                : "(scale=" + detail::format_double(e.beta_scale) + ")";
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using Json = nlohmann::json;

inline void require_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!obj.is_object()) throw DataError("config: " + std::string(where) + " must be an object");
  std::set<std::string_view> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key()))
      throw DataError("config: unknown key '" + it.key() + "' in " + std::string(where));
}

inline double get_number(const Json& j, std::string_view where) {
  if (!j.is_number()) throw DataError("config: " + std::string(where) + " must be a number");
  return j.get<double>();
}

inline long get_integer(const Json& j, std::string_view where) {
  if (!j.is_number_integer()) throw DataError("config: " + std::string(where) + " must be an integer");
  return j.get<long>();
}

inline SpectrumModel spectrum_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw DataError("config: spectrum must be a non-empty list");
  std::vector<SpectrumModel::Component> comps;
  for (const auto& c : j) {
    require_keys(c, {"atom", "interval", "weight"}, "spectrum component");
    const double w = c.contains("weight") ? get_number(c["weight"], "spectrum weight") : 1.0;
    if (c.contains("atom") == c.contains("interval"))
      throw DataError("config: spectrum component needs exactly one of atom / interval");
    if (c.contains("atom")) {
      comps.push_back(SpectrumModel::point_mass(get_number(c["atom"], "atom"), w));
    } else {
      const Json& iv = c["interval"];
      if (!iv.is_array() || iv.size() != 2) throw DataError("config: interval must be [lo, hi]");
      comps.push_back(SpectrumModel::uniform(get_number(iv[0], "interval lo"),
                                             get_number(iv[1], "interval hi"), w));
    }
  }
  return SpectrumModel(std::move(comps));
}

inline Json spectrum_to_json(const SpectrumModel& h) {
  Json out = Json::array();
  for (const auto& c : h.components()) {
    if (c.kind == SpectrumModel::Component::Kind::PointMass)
      out.push_back({{"atom", c.lo}, {"weight", c.weight}});
    else
      out.push_back({{"interval", {c.lo, c.hi}}, {"weight", c.weight}});
  }
  return out;
}

inline EntryLaw entry_law_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "gaussian") return EntryLaw::gaussian();
    if (s == "rademacher") return EntryLaw::rademacher();
    throw DataError("config: unknown entry_law '" + s + "'");
  }
  require_keys(j, {"kind", "df"}, "entry_law");
  const auto kind = j.value("kind", std::string("gaussian"));
  if (kind == "student_t") {
    if (!j.contains("df")) throw DataError("config: student_t entry law needs df");
    return EntryLaw::student_t(get_number(j["df"], "df"));
  }
  if (j.contains("df")) throw DataError("config: df only applies to student_t");
  return entry_law_from_json(Json(kind));
}

inline Json entry_law_to_json(const EntryLaw& law) {
  switch (law.kind) {
    case EntryLaw::Kind::Gaussian: return "gaussian";
    case EntryLaw::Kind::Rademacher: return "rademacher";
    case EntryLaw::Kind::StudentT: return {{"kind", "student_t"}, {"df", law.df}};
  }
  return nullptr;
}

inline EstimatorSpec estimator_from_json(const Json& j) {
  EstimatorSpec e;
  if (j.is_string()) {
    e.method = parse_method(j.get<std::string>());
  } else {
    require_keys(j, {"method", "t0", "upper_clip", "formula", "beta", "beta_scale", "label"},
                 "estimator");
    if (!j.contains("method")) throw DataError("config: estimator needs a method");
    e.method = parse_method(j["method"].get<std::string>());
    const bool lw = e.method == EstimatorSpec::Method::Lw;
    const bool dl = e.method == EstimatorSpec::Method::DiagonalLoading;
    if ((j.contains("t0") || j.contains("upper_clip") || j.contains("formula")) && !lw)
      throw DataError("config: t0/upper_clip/formula only apply to lw");
    if ((j.contains("beta") || j.contains("beta_scale")) && !dl)
      throw DataError("config: beta/beta_scale only apply to diagonal-loading");
    if (j.contains("t0")) e.lw.t0 = get_number(j["t0"], "t0");
    if (!(e.lw.t0 >= 0.0)) throw DataError("config: t0 must be >= 0");
    if (j.contains("upper_clip")) e.lw.upper_clip = parse_upper_clip(j["upper_clip"].get<std::string>());
    if (j.contains("formula")) e.lw.formula = parse_lw_formula(j["formula"].get<std::string>());
    if (j.contains("beta")) {
      e.beta = get_number(j["beta"], "beta");
      if (!(*e.beta > 0.0)) throw DataError("config: beta must be positive");
    }
    if (j.contains("beta_scale")) {
      e.beta_scale = get_number(j["beta_scale"], "beta_scale");
      if (!(e.beta_scale > 0.0)) throw DataError("config: beta_scale must be positive");
    }
    if (j.contains("label")) e.label = j["label"].get<std::string>();
  }
  if (e.label.empty()) e.label = default_label(e);
  return e;
}

inline Json estimator_to_json(const EstimatorSpec& e) {
  Json out = {{"method", method_name(e.method)}, {"label", e.label}};
  if (e.method == EstimatorSpec::Method::Lw) {
    out["t0"] = e.lw.t0;
    out["upper_clip"] = to_string(e.lw.upper_clip);
    out["formula"] = to_string(e.lw.formula);
  } else if (e.method == EstimatorSpec::Method::DiagonalLoading) {
    if (e.beta) out["beta"] = *e.beta;
    else out["beta_scale"] = e.beta_scale;
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::get_integer;
  using detail::get_number;
  detail::require_keys(j,
                       {"field", "spectrum", "rotate", "sizes", "entry_law", "amplitude", "alphas",
                        "estimators", "replicates", "trials", "master_seed"},
                       "config");
  ExperimentConfig cfg;
  try {
    if (j.contains("field")) cfg.field = parse_field(j["field"].get<std::string>());
    if (!j.contains("spectrum")) throw DataError("config: spectrum is required");
    cfg.spectrum = detail::spectrum_from_json(j["spectrum"]);
    if (j.contains("rotate")) cfg.rotate = j["rotate"].get<bool>();
    if (!j.contains("sizes") || !j["sizes"].is_array())
      throw DataError("config: sizes must be a list of [p, n] pairs");
    for (const auto& s : j["sizes"]) {
      if (!s.is_array() || s.size() != 2) throw DataError("config: each size must be [p, n]");
      cfg.sizes.push_back({get_integer(s[0], "p"), get_integer(s[1], "n")});
    }
    if (j.contains("entry_law")) cfg.entry_law = detail::entry_law_from_json(j["entry_law"]);
    if (j.contains("amplitude")) {
      const auto& a = j["amplitude"];
      if (a.is_number()) {
        cfg.amplitude.value = a.get<double>();
      } else {
        detail::require_keys(a, {"value", "deflection"}, "amplitude");
        if (a.contains("value") == a.contains("deflection"))
          throw DataError("config: amplitude needs exactly one of value / deflection");
        if (a.contains("value")) {
          cfg.amplitude.value = get_number(a["value"], "amplitude value");
        } else {
          cfg.amplitude.mode = AmplitudeSpec::Mode::Deflection;
          cfg.amplitude.value = get_number(a["deflection"], "amplitude deflection");
        }
      }
    }
    if (j.contains("alphas")) {
      cfg.alphas.clear();
      for (const auto& a : j["alphas"]) cfg.alphas.push_back(get_number(a, "alpha"));
    }
    if (!j.contains("estimators") || !j["estimators"].is_array())
      throw DataError("config: estimators must be a list");
    for (const auto& e : j["estimators"]) cfg.estimators.push_back(detail::estimator_from_json(e));
    if (j.contains("replicates")) cfg.replicates = get_integer(j["replicates"], "replicates");
    if (j.contains("trials")) cfg.trials = get_integer(j["trials"], "trials");
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["field"] = to_string(cfg.field);
  j["spectrum"] = detail::spectrum_to_json(cfg.spectrum);
  j["rotate"] = cfg.rotate;
  j["sizes"] = nlohmann::json::array();
  for (const auto& c : cfg.sizes) j["sizes"].push_back({c.p, c.n});
  j["entry_law"] = detail::entry_law_to_json(cfg.entry_law);
  if (cfg.amplitude.mode == AmplitudeSpec::Mode::Fixed)
    j["amplitude"] = {{"value", cfg.amplitude.value}};
  else
    j["amplitude"] = {{"deflection", cfg.amplitude.value}};
  j["alphas"] = cfg.alphas;
  j["estimators"] = nlohmann::json::array();
  for (const auto& e : cfg.estimators) j["estimators"].push_back(detail::estimator_to_json(e));
  j["replicates"] = cfg.replicates;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  return j;
}

}  // namespace amfshrink
