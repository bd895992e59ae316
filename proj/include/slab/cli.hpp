#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>

namespace slab {

// Exit-code taxonomy: 0 success, 1 domain/config error, 2 numerical or I/O
// failure, 3 failed science assertion.
enum ExitCode : int {
    kExitOk = 0,
    kExitDomain = 1,
    kExitNumerical = 2,
    kExitAssertion = 3,
};

struct RunConfig {
    std::string command;
    nlohmann::json params;  // validated, defaults filled
    std::string out_dir;
    int workers = 1;
    std::uint64_t seed = 1;
    bool validate_only = false;
};

// Parses and validates a JSON config document. Unknown keys, a supplied
// "beta", or domain-invalid parameters throw slab::domain_error with the
// offending path. command_hint (from the CLI subcommand) must agree with the
// config's "command" when both are present.
RunConfig parse_config(const std::string& text, const std::string& command_hint = "");

// Runs the configured pipeline, writing results CSV + JSON manifest under
// config.out_dir. Returns an ExitCode value.
int dispatch(const RunConfig& config);

int cli_main(int argc, char** argv);

}  // namespace slab
