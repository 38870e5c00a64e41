#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"

namespace nl2vis::vega_zero {

/// Validator for the JSON Schema draft-07 keywords the Vega-Lite schema uses:
/// $ref (local pointers), type, enum, const, properties, required,
/// additionalProperties, patternProperties, min/maxProperties, items,
/// min/maxItems, min/maxLength, pattern, minimum/maximum (and exclusive
/// forms), anyOf, allOf, oneOf, not. `format` and annotations are ignored.
class JsonSchemaValidator {
 public:
  using json = nlohmann::json;

  explicit JsonSchemaValidator(json schema) : root_(std::move(schema)) {}

  static JsonSchemaValidator from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open JSON schema '" + path.string() + "'");
    try {
      return JsonSchemaValidator(json::parse(in));
    } catch (const json::exception& e) {
      throw IoError("malformed JSON schema '" + path.string() + "': " + e.what());
    }
  }

  /// Returns the list of violations; empty means the instance is valid.
  std::vector<std::string> validate(const json& instance) const {
    std::vector<std::string> errors;
    check(root_, instance, "", &errors, 0);
    return errors;
  }

  bool is_valid(const json& instance) const { return check(root_, instance, "", nullptr, 0); }

 private:
  static constexpr int kMaxDepth = 256;

  const json& resolve(const std::string& ref) const {
    if (ref.empty() || ref[0] != '#') throw Error("unsupported $ref '" + ref + "'");
    if (ref == "#") return root_;
    // Pointer tokens in Vega-Lite refs may be percent-encoded ("%3C" for "<").
    std::string pointer;
    for (std::size_t i = 1; i < ref.size(); ++i) {
      if (ref[i] == '%' && i + 2 < ref.size()) {
        pointer += static_cast<char>(std::stoi(ref.substr(i + 1, 2), nullptr, 16));
        i += 2;
      } else {
        pointer += ref[i];
      }
    }
    return root_.at(json::json_pointer(pointer));
  }

  static bool type_matches(const std::string& type, const json& v) {
    if (type == "null") return v.is_null();
    if (type == "boolean") return v.is_boolean();
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") {
      if (v.is_number_integer()) return true;
      if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
      }
      return false;
    }
    return false;
  }

  static std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  }

  static bool fail(std::vector<std::string>* errors, const std::string& path,
                   const std::string& message) {
    if (errors) errors->push_back((path.empty() ? std::string("/") : path) + ": " + message);
    return false;
  }

  bool check(const json& schema, const json& v, const std::string& path,
             std::vector<std::string>* errors, int depth) const {
    if (depth > kMaxDepth) return fail(errors, path, "schema recursion too deep");
    if (schema.is_boolean())
      return schema.get<bool>() ? true : fail(errors, path, "false schema");
    if (!schema.is_object()) return true;

    if (auto it = schema.find("$ref"); it != schema.end())
      return check(resolve(it->get<std::string>()), v, path, errors, depth + 1);

    bool ok = true;
    auto record = [&](bool passed) {
      ok = ok && passed;
      return passed || errors != nullptr;  // keep going only when collecting
    };

    if (auto it = schema.find("type"); it != schema.end()) {
      bool matched = false;
      if (it->is_string()) {
        matched = type_matches(it->get<std::string>(), v);
      } else {
        for (const auto& t : *it) matched = matched || type_matches(t.get<std::string>(), v);
      }
      if (!record(matched || fail(errors, path, "type mismatch, expected " + it->dump())))
        return false;
    }
    if (auto it = schema.find("enum"); it != schema.end()) {
      bool found = false;
      for (const auto& e : *it) found = found || e == v;
      if (!record(found || fail(errors, path, "value not in enum"))) return false;
    }
    if (auto it = schema.find("const"); it != schema.end())
      if (!record(*it == v || fail(errors, path, "value differs from const " + it->dump())))
        return false;

    if (v.is_number()) {
      const double d = v.get<double>();
      if (auto it = schema.find("minimum"); it != schema.end())
        if (!record(d >= it->get<double>() || fail(errors, path, "below minimum"))) return false;
      if (auto it = schema.find("maximum"); it != schema.end())
        if (!record(d <= it->get<double>() || fail(errors, path, "above maximum"))) return false;
      if (auto it = schema.find("exclusiveMinimum"); it != schema.end() && it->is_number())
        if (!record(d > it->get<double>() || fail(errors, path, "not above exclusiveMinimum")))
          return false;
      if (auto it = schema.find("exclusiveMaximum"); it != schema.end() && it->is_number())
        if (!record(d < it->get<double>() || fail(errors, path, "not below exclusiveMaximum")))
          return false;
    }

    if (v.is_string()) {
      const std::string& s = v.get_ref<const std::string&>();
      if (auto it = schema.find("minLength"); it != schema.end())
        if (!record(utf8_length(s) >= it->get<std::size_t>() ||
                    fail(errors, path, "string shorter than minLength")))
          return false;
      if (auto it = schema.find("maxLength"); it != schema.end())
        if (!record(utf8_length(s) <= it->get<std::size_t>() ||
                    fail(errors, path, "string longer than maxLength")))
          return false;
      if (auto it = schema.find("pattern"); it != schema.end())
        if (!record(std::regex_search(s, std::regex(it->get<std::string>(), std::regex::ECMAScript)) ||
                    fail(errors, path, "string does not match pattern")))
          return false;
    }

    if (v.is_array()) {
      if (auto it = schema.find("minItems"); it != schema.end())
        if (!record(v.size() >= it->get<std::size_t>() || fail(errors, path, "too few items")))
          return false;
      if (auto it = schema.find("maxItems"); it != schema.end())
        if (!record(v.size() <= it->get<std::size_t>() || fail(errors, path, "too many items")))
          return false;
      if (auto it = schema.find("items"); it != schema.end()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          const json* item_schema = nullptr;
          if (it->is_array()) {
            if (i < it->size()) {
              item_schema = &(*it)[i];
            } else if (auto ai = schema.find("additionalItems"); ai != schema.end()) {
              item_schema = &*ai;
            }
          } else {
            item_schema = &*it;
          }
          if (item_schema &&
              !record(check(*item_schema, v[i], path + "/" + std::to_string(i), errors, depth + 1)))
            return false;
        }
      }
    }

    if (v.is_object()) {
      if (auto it = schema.find("required"); it != schema.end())
        for (const auto& name : *it)
          if (!record(v.contains(name.get<std::string>()) ||
                      fail(errors, path, "missing required property '" + name.get<std::string>() + "'")))
            return false;
      if (auto it = schema.find("minProperties"); it != schema.end())
        if (!record(v.size() >= it->get<std::size_t>() ||
                    fail(errors, path, "too few properties")))
          return false;
      if (auto it = schema.find("maxProperties"); it != schema.end())
        if (!record(v.size() <= it->get<std::size_t>() ||
                    fail(errors, path, "too many properties")))
          return false;

      const auto props = schema.find("properties");
      const auto pattern_props = schema.find("patternProperties");
      const auto additional = schema.find("additionalProperties");
      for (const auto& [key, value] : v.items()) {
        const std::string child = path + "/" + key;
        bool covered = false;
        if (props != schema.end()) {
          if (auto p = props->find(key); p != props->end()) {
            covered = true;
            if (!record(check(*p, value, child, errors, depth + 1))) return false;
          }
        }
        if (pattern_props != schema.end()) {
          for (const auto& [pattern, sub] : pattern_props->items()) {
            if (std::regex_search(key, std::regex(pattern, std::regex::ECMAScript))) {
              covered = true;
              if (!record(check(sub, value, child, errors, depth + 1))) return false;
            }
          }
        }
        if (!covered && additional != schema.end()) {
          if (additional->is_boolean()) {
            if (!record(additional->get<bool>() ||
                        fail(errors, path, "additional property '" + key + "' not allowed")))
              return false;
          } else if (!record(check(*additional, value, child, errors, depth + 1))) {
            return false;
          }
        }
      }
    }

    if (auto it = schema.find("allOf"); it != schema.end())
      for (const auto& sub : *it)
        if (!record(check(sub, v, path, errors, depth + 1))) return false;

    if (auto it = schema.find("anyOf"); it != schema.end()) {
      bool any = false;
      for (const auto& sub : *it) {
        if (check(sub, v, path, nullptr, depth + 1)) {
          any = true;
          break;
        }
      }
      if (!record(any || fail(errors, path, "no anyOf branch matched"))) return false;
    }

    if (auto it = schema.find("oneOf"); it != schema.end()) {
      int matches = 0;
      for (const auto& sub : *it) matches += check(sub, v, path, nullptr, depth + 1);
      if (!record(matches == 1 || fail(errors, path, "oneOf matched " + std::to_string(matches) +
                                                         " branches")))
        return false;
    }

    if (auto it = schema.find("not"); it != schema.end())
      if (!record(!check(*it, v, path, nullptr, depth + 1) ||
                  fail(errors, path, "instance matches 'not' schema")))
        return false;

    return ok;
  }

  json root_;
};

}  // namespace nl2vis::vega_zero
