#pragma once

#include <CLI11.hpp>
#include <json.hpp>
#include <string>
#include <vector>

namespace cellprob::cli {

/// CLI11 config reader/writer for a single JSON document. Keys name long
/// options ("noise_sd" and "noise-sd" both map to --noise-sd); arrays give
/// multi-value options; nested objects address subcommands. Top-level keys
/// that are not subcommand sections go to the subcommand being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root = nullptr) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::ordered_json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        if (opt->get_type_size() == 0 && opt->get_expected_max() == 0) j[name] = true;
        else if (res.size() == 1 && opt->get_expected_max() <= 1) j[name] = res.front();
        else j[name] = res;
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      const std::string text = to_config(sub, default_also, false, "");
      if (text != "{}") j[sub->get_name()] = nlohmann::ordered_json::parse(text);
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    auto out = items(j, {});
    if (root_ != nullptr) {
      const auto active = root_->get_subcommands();
      if (!active.empty())
        for (auto& item : out)
          if (item.parents.empty() && root_->get_option_no_throw("--" + item.name) == nullptr)
            item.parents.push_back(active.front()->get_name());
    }
    return out;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static std::vector<CLI::ConfigItem> items(const nlohmann::json& j, const std::vector<std::string>& parents) {
    std::vector<CLI::ConfigItem> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::string key = it.key();
      for (char& c : key)
        if (c == '_') c = '-';
      const auto& v = it.value();
      if (v.is_object()) {
        auto p = parents;
        p.push_back(it.key());
        auto sub = items(v, p);
        out.insert(out.end(), sub.begin(), sub.end());
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
    return out;
  }
};

}  // namespace cellprob::cli
