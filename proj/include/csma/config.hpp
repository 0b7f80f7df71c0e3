#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csma/allocation.hpp"
#include "csma/error.hpp"
#include "csma/harness.hpp"

namespace csma {

/**
 * Experiment config files (schema_version = 1).
 *
 * Line-oriented `key = value` text; `#` starts a comment. Keys before the first
 * `[run NAME]` header are defaults shared by every run; keys inside a run
 * section override them. A file without run sections describes one run named
 * "default".
 *
 *   schema_version          1 (required, top level)
 *   seed                    unsigned 64-bit master seed
 *   workers                 worker threads, 0 = hardware concurrency
 *   modulator_groups        K, recorded only
 *   order                   QAM order, power of 4
 *   plan                    address | lookup | qos
 *   plan.address_positions  comma list of label bit positions (plan = address)
 *   plan.lookup_file        table path, relative to the config file (plan = lookup)
 *   plan.qos_bits           comma list of per-user data widths (plan = qos)
 *   schedule                round-robin | weighted
 *   schedule.weights        comma list, one per user (schedule = weighted)
 *   geometry.fft_size, geometry.subcarriers, geometry.symbols_per_slot,
 *   geometry.subcarrier_offset, geometry.cp_length
 *   snr.mode                symbol | databit
 *   snr.start_db, snr.stop_db, snr.step_db
 *   snr.points              explicit comma list of dB values, `inf` allowed
 *   snr.data_bits           data bits per symbol for databit mode on mixed plans
 *   stop.min_symbols, stop.min_errors, stop.max_symbols
 *   batch_slots             slots per batch between stop-rule checks
 */
inline constexpr int config_schema_version = 1;

namespace detail {

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
};

using ConfigSection = std::map<std::string, ConfigEntry>;

[[noreturn]] inline void config_fail(std::size_t line, const std::string& msg)
{
    throw Error(ErrorCode::config, "line " + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_integer(const ConfigEntry& e, const std::string& key)
{
    T v{};
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        config_fail(e.line, "'" + key + "' expects an integer, got '" + e.value + "'");
    return v;
}

inline double parse_real(const std::string& text, std::size_t line, const std::string& key)
{
    if (text == "inf" || text == "+inf")
        return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* b = text.data();
    const char* end = b + text.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        config_fail(line, "'" + key + "' expects a number, got '" + text + "'");
    return v;
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

template <class T>
std::vector<T> parse_int_list(const ConfigEntry& e, const std::string& key)
{
    std::vector<T> out;
    for (const auto& item : split_list(e.value))
        out.push_back(parse_integer<T>({item, e.line}, key));
    return out;
}

inline const std::vector<std::string>& known_keys()
{
    static const std::vector<std::string> keys = {
        "schema_version",     "seed",           "workers",          "modulator_groups",
        "order",              "plan",           "plan.address_positions", "plan.lookup_file",
        "plan.qos_bits",      "schedule",       "schedule.weights", "geometry.fft_size",
        "geometry.subcarriers", "geometry.symbols_per_slot", "geometry.subcarrier_offset",
        "geometry.cp_length", "snr.mode",       "snr.start_db",     "snr.stop_db",
        "snr.step_db",        "snr.points",     "snr.data_bits",    "stop.min_symbols",
        "stop.min_errors",    "stop.max_symbols", "batch_slots",
    };
    return keys;
}

inline ExperimentConfig build_config(const std::string& name, const ConfigSection& s,
                                     const std::filesystem::path& base_dir)
{
    ExperimentConfig c;
    c.name = name;
    const auto get = [&](const std::string& key) -> const ConfigEntry* {
        auto it = s.find(key);
        return it == s.end() ? nullptr : &it->second;
    };
    if (auto e = get("seed"))
        c.seed = parse_integer<std::uint64_t>(*e, "seed");
    if (auto e = get("workers"))
        c.workers = parse_integer<unsigned>(*e, "workers");
    if (auto e = get("modulator_groups"))
        c.modulator_groups = parse_integer<std::uint32_t>(*e, "modulator_groups");
    if (auto e = get("batch_slots"))
        c.batch_slots = parse_integer<std::uint32_t>(*e, "batch_slots");
    if (auto e = get("order"))
        c.order = parse_integer<std::uint32_t>(*e, "order");

    const auto* plan = get("plan");
    if (!plan)
        throw Error(ErrorCode::config, "run '" + name + "': missing 'plan'");
    if (plan->value == "address") {
        c.plan.kind = PlanSpec::Kind::address_bit;
        const auto* e = get("plan.address_positions");
        if (!e)
            config_fail(plan->line, "plan = address needs plan.address_positions");
        c.plan.address_positions = parse_int_list<unsigned>(*e, "plan.address_positions");
    } else if (plan->value == "lookup") {
        c.plan.kind = PlanSpec::Kind::lookup_file;
        const auto* e = get("plan.lookup_file");
        if (!e)
            config_fail(plan->line, "plan = lookup needs plan.lookup_file");
        const std::filesystem::path p(e->value);
        c.plan.lookup_file = (p.is_absolute() ? p : base_dir / p).string();
    } else if (plan->value == "qos") {
        c.plan.kind = PlanSpec::Kind::qos;
        const auto* e = get("plan.qos_bits");
        if (!e)
            config_fail(plan->line, "plan = qos needs plan.qos_bits");
        c.plan.qos_bits = parse_int_list<unsigned>(*e, "plan.qos_bits");
    } else {
        config_fail(plan->line, "unknown plan '" + plan->value + "' (address | lookup | qos)");
    }

    if (auto e = get("schedule")) {
        if (e->value == "round-robin") {
            c.schedule.kind = ScheduleSpec::Kind::round_robin;
        } else if (e->value == "weighted") {
            c.schedule.kind = ScheduleSpec::Kind::weighted;
            const auto* w = get("schedule.weights");
            if (!w)
                config_fail(e->line, "schedule = weighted needs schedule.weights");
            c.schedule.weights = parse_int_list<std::uint32_t>(*w, "schedule.weights");
        } else {
            config_fail(e->line, "unknown schedule '" + e->value + "' (round-robin | weighted)");
        }
    }

    if (auto e = get("geometry.fft_size"))
        c.geometry.fft_size = parse_integer<std::uint32_t>(*e, "geometry.fft_size");
    if (auto e = get("geometry.subcarriers"))
        c.geometry.subcarriers = parse_integer<std::uint32_t>(*e, "geometry.subcarriers");
    if (auto e = get("geometry.symbols_per_slot"))
        c.geometry.symbols_per_slot = parse_integer<std::uint32_t>(*e, "geometry.symbols_per_slot");
    if (auto e = get("geometry.subcarrier_offset"))
        c.geometry.subcarrier_offset = parse_integer<std::uint32_t>(*e, "geometry.subcarrier_offset");
    if (auto e = get("geometry.cp_length"))
        c.geometry.cp_length = parse_integer<std::uint32_t>(*e, "geometry.cp_length");

    if (auto e = get("snr.mode")) {
        if (e->value == "symbol")
            c.sweep.mode = SnrMode::per_symbol;
        else if (e->value == "databit")
            c.sweep.mode = SnrMode::per_data_bit;
        else
            config_fail(e->line, "snr.mode must be symbol or databit");
    }
    if (auto e = get("snr.start_db"))
        c.sweep.start_db = parse_real(e->value, e->line, "snr.start_db");
    if (auto e = get("snr.stop_db"))
        c.sweep.stop_db = parse_real(e->value, e->line, "snr.stop_db");
    if (auto e = get("snr.step_db"))
        c.sweep.step_db = parse_real(e->value, e->line, "snr.step_db");
    if (auto e = get("snr.points"))
        for (const auto& item : split_list(e->value))
            c.sweep.points.push_back(parse_real(item, e->line, "snr.points"));
    if (auto e = get("snr.data_bits"))
        c.snr_data_bits = parse_integer<unsigned>(*e, "snr.data_bits");

    if (auto e = get("stop.min_symbols"))
        c.stop.min_symbols = parse_integer<std::uint64_t>(*e, "stop.min_symbols");
    if (auto e = get("stop.min_errors"))
        c.stop.min_errors = parse_integer<std::uint64_t>(*e, "stop.min_errors");
    if (auto e = get("stop.max_symbols"))
        c.stop.max_symbols = parse_integer<std::uint64_t>(*e, "stop.max_symbols");

    try {
        c.validate();
    } catch (const Error& err) {
        throw Error(ErrorCode::config, "run '" + name + "': " + err.what());
    }
    return c;
}

} // namespace detail

/// Parses a config document into one ExperimentConfig per run. Lookup paths resolve against base_dir.
inline std::vector<ExperimentConfig> parse_config(std::istream& in, const std::filesystem::path& base_dir = ".")
{
    using detail::config_fail;
    detail::ConfigSection global;
    std::vector<std::pair<std::string, detail::ConfigSection>> runs;
    detail::ConfigSection* current = &global;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                config_fail(line_no, "unterminated section header");
            const std::string inner = detail::trim(line.substr(1, line.size() - 2));
            if (inner.rfind("run", 0) != 0 || inner.size() < 5 || (inner[3] != ' ' && inner[3] != '\t'))
                config_fail(line_no, "section header must be [run NAME]");
            const std::string name = detail::trim(inner.substr(4));
            for (const auto& r : runs)
                if (r.first == name)
                    config_fail(line_no, "duplicate run '" + name + "'");
            runs.emplace_back(name, detail::ConfigSection{});
            current = &runs.back().second;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            config_fail(line_no, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto& keys = detail::known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            config_fail(line_no, "unknown key '" + key + "'");
        if (key == "schema_version" && current != &global)
            config_fail(line_no, "schema_version belongs at top level");
        if (value.empty())
            config_fail(line_no, "empty value for '" + key + "'");
        if (current->count(key))
            config_fail(line_no, "duplicate key '" + key + "'");
        (*current)[key] = {value, line_no};
    }

    const auto sv = global.find("schema_version");
    if (sv == global.end())
        throw Error(ErrorCode::config, "line 1: missing schema_version");
    if (detail::parse_integer<int>(sv->second, "schema_version") != config_schema_version)
        config_fail(sv->second.line, "unsupported schema_version '" + sv->second.value + "'");

    std::vector<ExperimentConfig> out;
    if (runs.empty()) {
        out.push_back(detail::build_config("default", global, base_dir));
        return out;
    }
    for (const auto& [name, section] : runs) {
        detail::ConfigSection merged = global;
        for (const auto& [k, v] : section)
            merged[k] = v;
        out.push_back(detail::build_config(name, merged, base_dir));
    }
    return out;
}

inline std::vector<ExperimentConfig> load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "cannot open config " + path.string());
    return parse_config(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

} // namespace csma
