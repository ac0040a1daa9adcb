#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "mpj/cli/config.hpp"

namespace mpj::cli {

inline constexpr std::string_view kCommands[] = {"generate", "decompose", "reconstruct", "preprocess",
                                                 "train",    "predict",     "evaluate",  "report"};

/// Runs one pipeline stage inside `out`. Throws the library's error types.
void run_command(std::string_view name, const RunConfig& cfg, const std::filesystem::path& out,
                 std::ostream& log);

/// 0 ok, 1 unexpected, 2 config or usage, 3 data, 4 numeric failure.
int exit_code_for(const std::exception& e);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::span<const char> bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mpj::cli
