#pragma once

// Materials data file:
//
//   { "schema": "spdc-materials/1", "version": "<tag>",
//     "materials": [ { "name", "sign": "negative"|"positive", "source",
//                      "o": { "A", "B", "C", "D", "range_nm": [lo, hi],
//                             "extra_poles": [[B, C], ...],     (optional)
//                             "poly": [[E, power], ...] },      (optional)
//                      "e": { same as "o" } } ] }
//
// Unknown keys are rejected.

#include <fstream>
#include <initializer_list>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "spdc/error.hpp"
#include "spdc/optics.hpp"

namespace spdc {

inline constexpr const char* kMaterialsSchema = "spdc-materials/1";

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error(ErrorKind::Config, where + ": unknown field '" + it.key() + "'");
  }
}

inline optics::SellmeierForm parse_sellmeier(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Config, where + ": expected an object");
  reject_unknown_keys(j, {"A", "B", "C", "D", "range_nm", "extra_poles", "poly"}, where);
  optics::SellmeierForm f;
  try {
    f.a = j.at("A").get<double>();
    f.poles.push_back({j.at("B").get<double>(), j.at("C").get<double>()});
    f.d = j.value("D", 0.0);
    const auto& range = j.at("range_nm");
    if (!range.is_array() || range.size() != 2) {
      throw Error(ErrorKind::Config, where + ": range_nm must be [min, max]");
    }
    f.min_nm = range[0].get<double>();
    f.max_nm = range[1].get<double>();
    if (j.contains("extra_poles")) {
      for (const auto& p : j.at("extra_poles")) {
        f.poles.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
    }
    if (j.contains("poly")) {
      for (const auto& p : j.at("poly")) {
        f.poly.push_back({p.at(0).get<double>(), p.at(1).get<int>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, where + ": " + e.what());
  }
  return f;
}

}  // namespace detail

class MaterialLibrary {
 public:
  MaterialLibrary() = default;

  static MaterialLibrary from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::Config, "materials: expected a JSON object");
    detail::reject_unknown_keys(doc, {"schema", "version", "materials"}, "materials");
    MaterialLibrary lib;
    try {
      if (doc.at("schema").get<std::string>() != kMaterialsSchema) {
        throw Error(ErrorKind::Config, "materials: unsupported schema");
      }
      lib.version_ = doc.at("version").get<std::string>();
      for (const auto& entry : doc.at("materials")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::string where = "materials[" + name + "]";
        detail::reject_unknown_keys(entry, {"name", "sign", "source", "o", "e"}, where);
        optics::Material m;
        m.name = name;
        const std::string sign = entry.at("sign").get<std::string>();
        if (sign == "negative") {
          m.sign = optics::UniaxialSign::Negative;
        } else if (sign == "positive") {
          m.sign = optics::UniaxialSign::Positive;
        } else {
          throw Error(ErrorKind::Config, where + ": sign must be 'negative' or 'positive'");
        }
        m.source = entry.value("source", std::string{});
        m.ordinary = detail::parse_sellmeier(entry.at("o"), where + ".o");
        m.extraordinary = detail::parse_sellmeier(entry.at("e"), where + ".e");
        try {
          optics::validate(m);
        } catch (const Error& e) {
          throw Error(ErrorKind::Config, e.what());
        }
        if (!lib.materials_.emplace(name, std::move(m)).second) {
          throw Error(ErrorKind::Config, where + ": duplicate material name");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("materials: ") + e.what());
    }
    return lib;
  }

  static MaterialLibrary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open materials file '" + path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, "materials file '" + path + "': " + e.what());
    }
    return from_json(doc);
  }

  const optics::Material& get(const std::string& name) const {
    auto it = materials_.find(name);
    if (it == materials_.end()) {
      throw Error(ErrorKind::Config, "unknown material '" + name + "'");
    }
    return it->second;
  }

  bool contains(const std::string& name) const { return materials_.count(name) != 0; }
  const std::string& version() const { return version_; }
  const std::map<std::string, optics::Material>& all() const { return materials_; }

 private:
  std::string version_;
  std::map<std::string, optics::Material> materials_;
};

}  // namespace spdc
