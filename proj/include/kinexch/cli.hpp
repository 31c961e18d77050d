#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace kinexch::cli {

enum class Command { Pde, Particles, Nanbu, Poc, Gini, Envelope };

Command parse_command(const std::string& name);
const char* to_string(Command command);

struct CliConfig {
  Command command = Command::Pde;
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = ".";
  std::optional<std::string> spec;  // overrides the config's "spec"
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

// Reads the JSON config (if any), runs the command and writes
// <out>/<command>.csv and <out>/<command>_summary.json.
int run(const CliConfig& cfg, std::ostream& out, std::ostream& err);

// argv front end; KINEXCH_WORKERS supplies the worker count when neither
// --workers nor the config sets it.
int parse_and_dispatch(int argc, char** argv);

// Shortest text that keeps 17 significant digits, C locale.
std::string format_number(double value);

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace kinexch::cli
