#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "egofields/benchmark.h"
#include "egofields/filtering.h"
#include "egofields/pipeline.h"
#include "egofields/propagation.h"

namespace egofields::cli {

using ojson = nlohmann::ordered_json;

// Every tunable with its default. A --config file may override any subset;
// unknown keys are rejected so that typos do not pass silently.
ojson default_config();

// Merges the file over `base`. Throws SchemaError naming the offending key.
ojson merge_config_file(const ojson& base, const std::filesystem::path& file);

// Sets a dotted key ("filter.overlap_threshold").
void set_key(ojson& config, const std::string& dotted, ojson value);

FilterConfig filter_config(const ojson& config);
VerifyConfig verify_config(const ojson& config);
SfmCommands sfm_commands(const ojson& config);
PropagationConfig propagation_config(const ojson& config);
SplitConfig split_config(const ojson& config);

}  // namespace egofields::cli
