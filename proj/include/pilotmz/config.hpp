#pragma once

#include <cstdint>
#include <string>

#include "pilotmz/scenario.hpp"

namespace pilotmz {

/// One run's full configuration: the physics spec plus execution mode and
/// output selection. Parses from flat `key = value` text with dotted
/// sections; serialization is canonical (every key, fixed order, 17
/// significant digits) and round-trips losslessly.
struct RunConfig {
    ScenarioSpec spec;
    bool serial = false;
    std::string out_dir = "out";
    bool emit_trajectories = false;
    bool emit_fields = false;
    bool emit_svg = false;

    bool operator==(const RunConfig&) const = default;
};

/// Throws std::invalid_argument naming the offending key or line on unknown,
/// duplicate, malformed, or out-of-range entries.
RunConfig parse_config(const std::string& text);

/// Throws std::runtime_error when the file cannot be read.
RunConfig load_config_file(const std::string& path);

std::string serialize_config(const RunConfig& cfg);

/// Canonical physics-only section: everything that determines the numbers,
/// nothing about where they are written. The config hash covers exactly this.
std::string serialize_spec(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

/// 16 lowercase hex digits of fnv1a64 over serialize_spec.
std::string config_hash_hex(const RunConfig& cfg);

} // namespace pilotmz
