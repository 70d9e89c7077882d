#include "varshap/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace varshap {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

std::string ensemble_to_json(const TreeEnsemble& ensemble) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["base_score"] = ensemble.base_score;
  doc["learning_rate"] = ensemble.learning_rate;
  doc["mode"] = model_mode_name(ensemble.mode);
  doc["final_train_mse"] = ensemble.final_train_mse;
  if (!std::isnan(ensemble.final_val_mse)) doc["final_val_mse"] = ensemble.final_val_mse;

  json grouping = json::array();
  for (const auto& [name, members] : ensemble.grouping.groups) {
    grouping.push_back({{"name", name}, {"features", members}});
  }
  doc["grouping"] = grouping;

  json trees = json::array();
  for (const auto& tree : ensemble.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.leaf_value}});
      } else {
        nodes.push_back({{"feature", n.split_feature},
                         {"threshold", n.split_threshold},
                         {"left", n.left},
                         {"right", n.right}});
      }
    }
    trees.push_back({{"group_tag", tree.group_tag}, {"nodes", nodes}});
  }
  doc["trees"] = trees;
  doc["train_mse_history"] = ensemble.train_mse_history;
  return doc.dump();
}

TreeEnsemble ensemble_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("ensemble format version mismatch");
  }
  TreeEnsemble ens;
  ens.base_score = doc.at("base_score").get<double>();
  ens.learning_rate = doc.at("learning_rate").get<double>();
  ens.mode = parse_model_mode(doc.at("mode").get<std::string>());
  ens.final_train_mse = doc.value("final_train_mse", 0.0);
  ens.final_val_mse = doc.value("final_val_mse", std::numeric_limits<double>::quiet_NaN());

  for (const auto& g : doc.at("grouping")) {
    ens.grouping.groups.push_back(
        {g.at("name").get<std::string>(), g.at("features").get<std::vector<int>>()});
  }
  for (const auto& t : doc.at("trees")) {
    RegressionTree tree;
    tree.group_tag = t.at("group_tag").get<int>();
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      if (n.contains("feature")) {
        node.split_feature = n.at("feature").get<int>();
        node.split_threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      } else {
        node.leaf_value = n.at("value").get<double>();
      }
      tree.nodes.push_back(node);
    }
    ens.trees.push_back(std::move(tree));
  }
  ens.train_mse_history = doc.value("train_mse_history", std::vector<double>{});
  return ens;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_directory(const std::string& path) {
  if (!path.empty()) std::filesystem::create_directories(path);
}

}  // namespace varshap
