#include "orl/cli/json_schema.hpp"

#include <sstream>

namespace orl {
namespace {

using nlohmann::json;

bool has_type(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "boolean") return value.is_boolean();
  if (type == "integer") return value.is_number_integer();
  if (type == "number") return value.is_number();
  if (type == "null") return value.is_null();
  return false;
}

std::string show(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& schema, const json& value, const std::string& path) {
    if (auto ref = schema.find("$ref"); ref != schema.end()) {
      const std::string target = ref->get<std::string>();
      const std::string prefix = "#/definitions/";
      if (target.rfind(prefix, 0) != 0) {
        fail(path, "unsupported $ref " + target);
        return;
      }
      check(root_.at("definitions").at(target.substr(prefix.size())), value, path);
      return;
    }
    if (auto type = schema.find("type"); type != schema.end()) {
      if (!has_type(value, type->get<std::string>())) {
        fail(path, "expected " + type->get<std::string>() + ", got " + value.type_name());
        return;
      }
    }
    if (auto options = schema.find("enum"); options != schema.end()) {
      bool found = false;
      for (const auto& o : *options) found = found || o == value;
      if (!found) fail(path, "value " + value.dump() + " not one of " + options->dump());
    }
    if (value.is_number()) check_number(schema, value.get<double>(), path);
    if (value.is_string()) {
      if (auto min = schema.find("minLength"); min != schema.end()) {
        if (value.get<std::string>().size() < min->get<std::size_t>()) {
          fail(path, "string shorter than " + min->dump());
        }
      }
    }
    if (value.is_array()) {
      if (auto min = schema.find("minItems"); min != schema.end()) {
        if (value.size() < min->get<std::size_t>()) fail(path, "fewer than " + min->dump() + " items");
      }
      if (auto items = schema.find("items"); items != schema.end()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          check(*items, value[i], path + "/" + std::to_string(i));
        }
      }
    }
    if (value.is_object()) check_object(schema, value, path);
  }

  std::vector<std::string> errors;

 private:
  void fail(const std::string& path, const std::string& message) {
    errors.push_back((path.empty() ? "/" : path) + ": " + message);
  }

  void check_number(const json& schema, double v, const std::string& path) {
    if (auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>()) {
      fail(path, show(v) + " is below minimum " + m->dump());
    }
    if (auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>()) {
      fail(path, show(v) + " is above maximum " + m->dump());
    }
    if (auto m = schema.find("exclusiveMinimum"); m != schema.end() && v <= m->get<double>()) {
      fail(path, show(v) + " must be greater than " + m->dump());
    }
    if (auto m = schema.find("exclusiveMaximum"); m != schema.end() && v >= m->get<double>()) {
      fail(path, show(v) + " must be less than " + m->dump());
    }
  }

  void check_object(const json& schema, const json& value, const std::string& path) {
    if (auto required = schema.find("required"); required != schema.end()) {
      for (const auto& key : *required) {
        if (!value.contains(key.get<std::string>())) {
          fail(path, "missing required property '" + key.get<std::string>() + "'");
        }
      }
    }
    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    const bool closed = extra != schema.end() && extra->is_boolean() && !extra->get<bool>();
    for (const auto& [key, child] : value.items()) {
      if (props != schema.end() && props->contains(key)) {
        check(props->at(key), child, path + "/" + key);
      } else if (closed) {
        fail(path, "unknown property '" + key + "'");
      }
    }
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_json(const json& schema, const json& instance) {
  Validator v(schema);
  v.check(schema, instance, "");
  return std::move(v.errors);
}

}  // namespace orl
