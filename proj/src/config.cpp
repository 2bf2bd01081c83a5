#include "pilotmz/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pilotmz {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE)
        throw std::invalid_argument("config key " + key +
                                    ": not a number: " + value);
    return v;
}

long long parse_ll(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size() || value.empty() || errno == ERANGE)
        throw std::invalid_argument("config key " + key +
                                    ": not an integer: " + value);
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size() || value.empty() ||
        errno == ERANGE || value.front() == '-')
        throw std::invalid_argument("config key " + key +
                                    ": not an unsigned integer: " + value);
    return v;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "scenario") {
        if (!parse_scenario_name(value, cfg.spec.name))
            throw std::invalid_argument("config key scenario: unknown name: " +
                                        value);
    } else if (key == "ensemble.n") {
        const long long n = parse_ll(key, value);
        if (n < 1 || n > 100000000)
            throw std::invalid_argument("config key ensemble.n: out of range");
        cfg.spec.n = static_cast<int>(n);
    } else if (key == "ensemble.seed") {
        cfg.spec.seed = parse_u64(key, value);
    } else if (key == "ensemble.mode") {
        if (value == "serial")
            cfg.serial = true;
        else if (value == "parallel")
            cfg.serial = false;
        else
            throw std::invalid_argument(
                "config key ensemble.mode: expected serial or parallel");
    } else if (key == "marker.efficiency_sq") {
        const double v = parse_double(key, value);
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument(
                "config key marker.efficiency_sq: must lie in [0, 1]");
        cfg.spec.efficiency_sq = v;
    } else if (key == "marker.ejection_speed") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument(
                "config key marker.ejection_speed: must be positive");
        cfg.spec.ejection_speed = v;
    } else if (key == "schedule.direction") {
        if (value == "insert")
            cfg.spec.direction = ScheduleDirection::insert;
        else if (value == "remove")
            cfg.spec.direction = ScheduleDirection::remove;
        else
            throw std::invalid_argument(
                "config key schedule.direction: expected insert or remove");
    } else if (key == "schedule.t_c") {
        cfg.spec.t_c = parse_double(key, value);
    } else if (key == "source.sigma0") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument("config key source.sigma0: must be positive");
        cfg.spec.sigma0 = v;
    } else if (key == "source.mass") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument("config key source.mass: must be positive");
        cfg.spec.mass = v;
    } else if (key == "source.speed") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument("config key source.speed: must be positive");
        cfg.spec.speed = v;
    } else if (key == "integrator.rtol") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument("config key integrator.rtol: must be positive");
        cfg.spec.rtol = v;
    } else if (key == "integrator.atol") {
        const double v = parse_double(key, value);
        if (v <= 0.0)
            throw std::invalid_argument("config key integrator.atol: must be positive");
        cfg.spec.atol = v;
    } else if (key == "fields.time") {
        const double v = parse_double(key, value);
        if (v < 0.0)
            throw std::invalid_argument("config key fields.time: must be nonnegative");
        cfg.spec.fields_time = v;
    } else if (key == "output.dir") {
        if (value.empty())
            throw std::invalid_argument("config key output.dir: must not be empty");
        cfg.out_dir = value;
    } else if (key == "output.emit") {
        cfg.emit_trajectories = cfg.emit_fields = cfg.emit_svg = false;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item == "trajectories")
                cfg.emit_trajectories = true;
            else if (item == "fields")
                cfg.emit_fields = true;
            else if (item == "svg")
                cfg.emit_svg = true;
            else if (!item.empty())
                throw std::invalid_argument(
                    "config key output.emit: unknown item: " + item);
        }
    } else {
        throw std::invalid_argument("unknown config key: " + key);
    }
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        if (!seen.insert(key).second)
            throw std::invalid_argument("duplicate config key: " + key);
        apply_key(cfg, key, value);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_spec(const RunConfig& cfg) {
    std::string out;
    out += "scenario = " + std::string(scenario_name_string(cfg.spec.name)) + "\n";
    out += "ensemble.n = " + std::to_string(cfg.spec.n) + "\n";
    out += "ensemble.seed = " + std::to_string(cfg.spec.seed) + "\n";
    out += std::string("ensemble.mode = ") + (cfg.serial ? "serial" : "parallel") +
           "\n";
    out += "marker.efficiency_sq = " + fmt17(cfg.spec.efficiency_sq) + "\n";
    out += "marker.ejection_speed = " + fmt17(cfg.spec.ejection_speed) + "\n";
    out += std::string("schedule.direction = ") +
           (cfg.spec.direction == ScheduleDirection::insert ? "insert" : "remove") +
           "\n";
    out += "schedule.t_c = " + fmt17(cfg.spec.t_c) + "\n";
    out += "source.sigma0 = " + fmt17(cfg.spec.sigma0) + "\n";
    out += "source.mass = " + fmt17(cfg.spec.mass) + "\n";
    out += "source.speed = " + fmt17(cfg.spec.speed) + "\n";
    out += "integrator.rtol = " + fmt17(cfg.spec.rtol) + "\n";
    out += "integrator.atol = " + fmt17(cfg.spec.atol) + "\n";
    out += "fields.time = " + fmt17(cfg.spec.fields_time) + "\n";
    return out;
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out = serialize_spec(cfg);
    out += "output.dir = " + cfg.out_dir + "\n";
    std::string emit;
    if (cfg.emit_trajectories) emit += "trajectories";
    if (cfg.emit_fields) emit += emit.empty() ? "fields" : ",fields";
    if (cfg.emit_svg) emit += emit.empty() ? "svg" : ",svg";
    out += "output.emit = " + emit + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
    const std::uint64_t h = fnv1a64(serialize_spec(cfg));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pilotmz
