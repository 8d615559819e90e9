#pragma once

#include "mosco/study.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace mosco::cli {

using json = nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_numerical = 1;
inline constexpr int exit_usage = 2;

inline constexpr const char* tool_version = "1.0.0";

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hash_string(std::string_view bytes);  // "fnv1a64:<16 hex digits>"

/// A number is a constant preset; otherwise {"kind": name, "params": [...]}.
ScalarPreset parse_preset(const json& j);
json preset_to_json(const ScalarPreset& p);

CoefficientSet parse_coefficients(const json& j);
TimeGrid parse_time(const json& j);
BoundaryCondition parse_bc(const json& j);
PgsOptions parse_pgs(const json& j);

/// {"generator": cracked_disk | unit_disk | fixed_hole | dumbbell | rectangle, ...} or {"file": path};
/// relative paths resolve against base_dir.
MeshPtr build_mesh(const json& j, const std::filesystem::path& base_dir);
/// {"kind": cracked_disk | fixed_hole | dumbbell | repeated, ...}
DomainFamily build_family(const json& j, const std::filesystem::path& base_dir);

/// Seed from MOSCO_LAB_SEED if set, else the config's "seed", else 1.
unsigned effective_seed(const json& cfg);

StudyConfig parse_study(const json& cfg, const std::filesystem::path& base_dir);

/// Loads a config file; a manifest written by this tool is accepted and its echoed config used.
json load_config(const std::filesystem::path& path);

std::string report_csv(const ConvergenceReport& r);
json report_json(const ConvergenceReport& r);

int cmd_mesh(const json& mesh_cfg, const std::filesystem::path& out);
int cmd_solve(const std::filesystem::path& config, const std::filesystem::path& out);
int cmd_study(const std::filesystem::path& config, const std::filesystem::path& out, int jobs);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace mosco::cli
