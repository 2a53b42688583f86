#pragma once

#include <string>
#include <vector>

#include "benchkit/config.hpp"
#include "benchkit/jsonl.hpp"

namespace benchkit {

// Every pipeline stage writes a manifest next to its artifacts: config
// checksum, seed, input/output checksums and gateway counters. Outputs are
// reproducible byte-for-byte from a manifest given the same seed and a warm
// cache; the timestamp is the only field allowed to differ.
struct StageManifest {
    std::string stage;
    std::string config_checksum;
    uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, checksum
    std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
    GatewayStats gateway;
    std::string timestamp;

    void write(const std::string& path) const;
    static StageManifest read(const std::string& path);
};

// Fails with an error naming the producing subcommand when a stage input is
// missing; warns on stderr when the producing stage ran under a different
// config.
void require_artifact(const std::string& path, const std::string& producer_command,
                      const RunConfig& config);

}  // namespace benchkit
