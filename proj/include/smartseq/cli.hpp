#pragma once
// Command drivers behind the CLI: JSON config parsing, experiment execution,
// and deterministic CSV/JSON reporting. Output bytes depend only on
// (config, seed) -- never on thread count.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "smartseq/simulate.hpp"

namespace smartseq {

struct RunConfig {
    std::string command;  // simulate | calibrate | ingest | compare | analyze-limits
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;  // overrides the config's seed
    int threads = -1;                   // -1: SMARTSEQ_THREADS or hardware, 0: hardware
    bool approx_only = false;           // calibrate: skip Monte Carlo
};

// Executes one command; returns the process exit code (0 only when every
// requested unit of work completed without a structured error).
int run_command(const RunConfig& config);

// Parsers are exposed for tests; they throw std::invalid_argument with a
// JSON-pointer path on schema violations.
SweepSpec sweep_spec_from_json(const nlohmann::json& j);
MixtureModel model_from_json(const nlohmann::json& j, int default_p);

// Fixed 17-significant-digit float serialization used by every CSV cell.
std::string format_double(double v);

// FNV-1a 64-bit hash of the raw config bytes, hex-encoded.
std::string config_hash(const std::string& bytes);

}  // namespace smartseq
