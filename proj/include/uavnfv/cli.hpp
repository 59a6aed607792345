#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uavnfv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Entry point behind the uavnfv tool. Commands: train, eval, replay, sweep, validate-config.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace uavnfv
