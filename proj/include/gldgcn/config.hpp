#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gldgcn/cluster_train.hpp"
#include "gldgcn/dataset.hpp"
#include "gldgcn/model.hpp"

namespace gldgcn {

/// Every setting a command can use. Built from defaults, then a config file,
/// then command-line flags.
struct RunConfig {
  ModelConfig model;
  std::string dataset = "karate";  ///< built-in name, directory, or name under GLDGCN_DATA_DIR
  std::string out = "run";         ///< output directory
  int threads = 1;
  SplitSpec split;
  long long karate_train_seed = -1;  ///< -1 keeps the lowest-index node per class
  bool cluster = false;
  ClusterConfig cluster_cfg;
  std::string checkpoint;  ///< input for eval; empty means <out>/checkpoint.txt
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// All accepted keys in echo order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key; throws ConfigError on an unknown key or a malformed value.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Effective values of every key, in config_keys() order.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);

/// Parses flat "key = value" lines; '#' starts a comment. Throws ConfigError
/// with the line number on malformed lines.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& p);

/// Locates the dataset directory: the path itself, then $GLDGCN_DATA_DIR/name.
/// Returns an empty path for the built-in karate set.
std::filesystem::path resolve_dataset(const std::string& name);

/// Loads the dataset named by cfg (built-in or on disk).
DatasetBundle load_configured_dataset(const RunConfig& cfg);

}  // namespace gldgcn
