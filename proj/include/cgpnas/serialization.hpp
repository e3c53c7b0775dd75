#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cgpnas/decoder.hpp"
#include "cgpnas/evolution.hpp"
#include "cgpnas/genome.hpp"

namespace cgpnas {

/// Insertion-ordered so every artifact keeps its documented field order.
using Json = nlohmann::ordered_json;

Json grid_config_to_json(const GridConfig& c);
GridConfig grid_config_from_json(const Json& j, const std::string& where = "grid");

/// {"config": {...grid..., "functions": [...]}, "grid": [[fn, in1, in2, param], ...], "output": n}
Json genotype_to_json(const Genotype& g);
/// Throws DecodeError on malformed or structurally invalid input.
Genotype genotype_from_json(const Json& j);

Json param_to_json(FunctionId f, ParamValue p);
ParamValue param_from_json(FunctionId f, const Json& j);

/// {"nodes": [{"id","fn","param","inputs","shape"}...], "input_shape", "output"}
Json graph_to_json(const ArchitectureGraph& graph);
ArchitectureGraph graph_from_json(const Json& j);

Json history_to_json(const HistoryRecord& r);
HistoryRecord history_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const Json& j);

} // namespace cgpnas
