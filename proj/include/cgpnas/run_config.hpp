#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "cgpnas/dataset.hpp"
#include "cgpnas/evolution.hpp"
#include "cgpnas/function_catalog.hpp"
#include "cgpnas/genome.hpp"
#include "cgpnas/serialization.hpp"

namespace cgpnas {

enum class Preset { Paper, Desk };

std::string_view preset_name(Preset p);
std::optional<Preset> parse_preset(std::string_view name);

struct RunConfig {
    Preset preset = Preset::Desk;
    GridConfig grid;
    EvolutionConfig evolution;
    FunctionCatalog catalog;
    /// Ablation preset name or "custom" when given as a function list.
    std::string catalog_name = "s_full";
    DataConfig data;
    std::filesystem::path output_dir = "run";
    std::size_t checkpoint_every = 10;
    bool cache = true;
    std::size_t threads = 1;
    /// Non-empty: fitness comes from this command over the line protocol.
    std::string external_command;
    std::string tag;

    /// Throws ConfigError naming the first bad field.
    void validate() const;
    /// Sets both the evolution and the data seed.
    void set_seed(std::uint64_t seed);

    bool operator==(const RunConfig&) const = default;
};

RunConfig preset_config(Preset p);

/// Preset defaults overlaid with the keys present in `j`. Unknown keys and
/// wrongly typed values raise ConfigError with the field path.
RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& c);

/// Missing or unparsable files raise ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace cgpnas
