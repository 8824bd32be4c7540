#pragma once

// CLI11 config reader for JSON files. Nested objects address subcommands,
// the same way TOML sections do.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <istream>
#include <string>
#include <vector>

namespace causalreg::tools {

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0)
        j[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty())
        j[name] = opt->get_default_str();
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      if (sub->get_name().empty()) continue;
      auto child = nlohmann::json::parse(to_config(sub, default_also, false, ""));
      if (!child.empty()) j[sub->get_name()] = child;
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (key == "schema_version") continue;
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

}  // namespace causalreg::tools
