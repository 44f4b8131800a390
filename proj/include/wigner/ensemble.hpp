#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wigner/algebra.hpp"

namespace wigner {

enum class EntryLaw { rademacher, gaussian, uniform, two_point, custom };

/// Matrix order plus the even moments of the off-diagonal entry law.
struct EnsembleSpec {
  std::optional<BigInt> n;  // unset means symbolic n
  EntryLaw law = EntryLaw::rademacher;
  Rational parameter = 1;               // gaussian: v2; uniform: half-width a; two_point: c
  std::vector<Rational> custom_moments;  // custom: v2, v4, v6, ...
  Rational diagonal_second_moment = 0;
  std::string preset_name = "rademacher";

  /// v_{2j}.
  Rational moment(int j) const {
    if (j < 1) throw Error("moment index must be >= 1");
    switch (law) {
      case EntryLaw::rademacher:
        return 1;
      case EntryLaw::gaussian: {
        Rational out = 1;
        for (int i = 1; i <= j; ++i) out *= Rational(2 * i - 1) * parameter;
        return out;
      }
      case EntryLaw::uniform: {
        Rational out = 1;
        for (int i = 0; i < 2 * j; ++i) out *= parameter;
        return out / (2 * j + 1);
      }
      case EntryLaw::two_point: {
        Rational out = 1;
        for (int i = 0; i < 2 * j; ++i) out *= parameter;
        return out;
      }
      case EntryLaw::custom:
        if (j > static_cast<int>(custom_moments.size())) throw MissingMoment(j);
        return custom_moments[j - 1];
    }
    return 0;
  }

  Rational variance() const { return moment(1); }

  /// vt_{2j} = v_{2j} / v_2^j.
  Rational standardized(int j) const {
    Rational v2 = variance();
    Rational den = 1;
    for (int i = 0; i < j; ++i) den *= v2;
    return moment(j) / den;
  }

  void validate() const {
    if (variance() <= 0) throw Error("ensemble variance v2 must be positive");
    if (diagonal_second_moment < 0) throw Error("diagonal second moment must be >= 0");
  }

  static EnsembleSpec rademacher() { return {}; }

  static EnsembleSpec gaussian(const Rational& v2 = 1) {
    EnsembleSpec e;
    e.law = EntryLaw::gaussian;
    e.parameter = v2;
    e.preset_name = "gaussian";
    return e;
  }

  static EnsembleSpec uniform(const Rational& half_width) {
    EnsembleSpec e;
    e.law = EntryLaw::uniform;
    e.parameter = half_width;
    e.preset_name = "uniform";
    return e;
  }

  static EnsembleSpec two_point(const Rational& c) {
    EnsembleSpec e;
    e.law = EntryLaw::two_point;
    e.parameter = c;
    e.preset_name = "two_point";
    return e;
  }

  static EnsembleSpec custom(std::vector<Rational> moments) {
    EnsembleSpec e;
    e.law = EntryLaw::custom;
    e.custom_moments = std::move(moments);
    e.preset_name = "custom";
    return e;
  }

  /// "rademacher", "gaussian[:v2]", "uniform:a", "two_point:c", "custom:v2,v4,..."
  static EnsembleSpec parse(const std::string& text) {
    auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    for (auto& ch : name)
      if (ch == '-') ch = '_';
    EnsembleSpec e;
    if (name == "rademacher") {
      if (!arg.empty()) throw ParseError("rademacher takes no parameter");
    } else if (name == "gaussian") {
      e = gaussian(arg.empty() ? Rational(1) : parse_rational(arg));
    } else if (name == "uniform") {
      e = uniform(arg.empty() ? Rational(1) : parse_rational(arg));
    } else if (name == "two_point") {
      if (arg.empty()) throw ParseError("two_point needs a parameter, e.g. two_point:2");
      e = two_point(parse_rational(arg));
    } else if (name == "custom") {
      std::vector<Rational> moments;
      std::stringstream ss(arg);
      std::string item;
      while (std::getline(ss, item, ',')) moments.push_back(parse_rational(item));
      if (moments.empty()) throw ParseError("custom ensemble needs at least v2");
      e = custom(std::move(moments));
    } else {
      throw ParseError("unknown ensemble preset '" + text + "'");
    }
    e.validate();
    return e;
  }

  /// {"preset": "gaussian", "parameter": "2"} or {"moments": ["1", "3", "15"]}, optional "n" and "s2".
  static EnsembleSpec from_json(const nlohmann::json& j) {
    auto rational = [](const nlohmann::json& v) {
      return v.is_string() ? parse_rational(v.get<std::string>()) : parse_rational(v.dump());
    };
    EnsembleSpec e;
    if (j.contains("moments")) {
      std::vector<Rational> m;
      for (const auto& v : j.at("moments")) m.push_back(rational(v));
      e = custom(std::move(m));
      if (j.contains("name")) e.preset_name = j.at("name").get<std::string>();
    } else {
      std::string spec = j.value("preset", "rademacher");
      if (j.contains("parameter")) spec += ":" + (j.at("parameter").is_string() ? j.at("parameter").get<std::string>()
                                                                                 : j.at("parameter").dump());
      e = parse(spec);
    }
    if (j.contains("n")) e.n = BigInt(j.at("n").is_string() ? j.at("n").get<std::string>() : j.at("n").dump());
    if (j.contains("s2")) e.diagonal_second_moment = rational(j.at("s2"));
    e.validate();
    return e;
  }

  static EnsembleSpec from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open ensemble file '" + path + "'");
    return from_json(nlohmann::json::parse(in));
  }

  /// Preset name, or a path to a JSON file when the argument ends in ".json".
  static EnsembleSpec resolve(const std::string& text) {
    if (text.size() > 5 && text.substr(text.size() - 5) == ".json") return from_file(text);
    return parse(text);
  }
};

}  // namespace wigner
