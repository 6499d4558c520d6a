#include "hypervd/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include "hypervd/error.hpp"

namespace hypervd {

namespace pt = boost::property_tree;

void apply_seed_override(train::TrainConfig& cfg) {
  const char* env = std::getenv("HYPERVD_SEED");
  if (env == nullptr || *env == '\0') return;
  const std::string s(env);
  std::uint64_t seed = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(fmt::format("config: HYPERVD_SEED='{}' is not an unsigned integer", s));
  }
  cfg.seed = seed;
}

RunConfig RunConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  RunConfig rc;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  rc.checkpoint = resolve(rc.checkpoint.string());
  rc.history = resolve(rc.history.string());
  rc.scores_dir = resolve(rc.scores_dir.string());
  std::map<std::string, std::string> model_kv, train_kv;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError(fmt::format("config: key '{}' outside a section", section));
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      if (section == "model") {
        model_kv[key] = value;
      } else if (section == "train") {
        train_kv[key] = value;
      } else if (section == "data") {
        if (key == "train_manifest") rc.train_manifest = resolve(value);
        else if (key == "test_manifest") rc.test_manifest = resolve(value);
        else throw ConfigError(fmt::format("config: unknown data key '{}'", key));
      } else if (section == "output") {
        if (key == "checkpoint") rc.checkpoint = resolve(value);
        else if (key == "history") rc.history = resolve(value);
        else if (key == "scores_dir") rc.scores_dir = resolve(value);
        else throw ConfigError(fmt::format("config: unknown output key '{}'", key));
      } else {
        throw ConfigError(fmt::format("config: unknown section [{}]", section));
      }
    }
  }
  rc.model = model::ModelConfig::from_map(model_kv);
  rc.train = train::TrainConfig::from_map(train_kv);
  return rc;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig rc = parse(ss.str(), path.parent_path());
  apply_seed_override(rc.train);
  rc.train.validate();
  return rc;
}

std::string RunConfig::to_ini() const {
  std::string s = "[model]\n";
  for (const auto& [k, v] : model.to_map()) s += fmt::format("{} = {}\n", k, v);
  s += "\n[train]\n";
  for (const auto& [k, v] : train.to_map()) s += fmt::format("{} = {}\n", k, v);
  s += "\n[data]\n";
  if (!train_manifest.empty()) s += fmt::format("train_manifest = {}\n", train_manifest.string());
  if (!test_manifest.empty()) s += fmt::format("test_manifest = {}\n", test_manifest.string());
  s += fmt::format("\n[output]\ncheckpoint = {}\nhistory = {}\nscores_dir = {}\n", checkpoint.string(),
                   history.string(), scores_dir.string());
  return s;
}

}  // namespace hypervd
