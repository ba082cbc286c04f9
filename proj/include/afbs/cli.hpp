#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace afbs::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kConfigError = 2;

// Applies AFBS_LOG={error,info,debug} to the global logger.
void configure_logging();

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override = std::nullopt);

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& strategies,
              const std::string& out_dir,
              std::optional<std::uint64_t> seed_override = std::nullopt);

int cmd_export_data(const std::string& config_path, const std::string& out_path);

int main(int argc, char** argv);

}  // namespace afbs::cli
