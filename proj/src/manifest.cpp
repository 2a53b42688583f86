#include "benchkit/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "benchkit/errors.hpp"
#include "benchkit/hash.hpp"

namespace benchkit {

namespace fs = std::filesystem;

void StageManifest::write(const std::string& path) const {
    Json in = Json::object();
    for (const auto& [p, sum] : inputs) in[p] = sum;
    Json out = Json::object();
    for (const auto& [p, sum] : outputs) out[p] = sum;

    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));

    Json j{{"stage", stage},
           {"config_checksum", config_checksum},
           {"seed", seed},
           {"inputs", in},
           {"outputs", out},
           {"gateway",
            Json{{"provider_calls", gateway.provider_calls},
                 {"cache_hits", gateway.cache_hits},
                 {"retries", gateway.retries}}},
           {"timestamp", stamp}};
    fs::create_directories(fs::path(path).parent_path());
    write_text_file(path, j.dump(2) + "\n");
}

StageManifest StageManifest::read(const std::string& path) {
    Json j = Json::parse(read_text_file(path));
    StageManifest m;
    m.stage = j.value("stage", "");
    m.config_checksum = j.value("config_checksum", "");
    m.seed = j.value("seed", uint64_t{0});
    if (j.contains("inputs"))
        for (auto it = j["inputs"].begin(); it != j["inputs"].end(); ++it)
            m.inputs.emplace_back(it.key(), it.value().get<std::string>());
    if (j.contains("outputs"))
        for (auto it = j["outputs"].begin(); it != j["outputs"].end(); ++it)
            m.outputs.emplace_back(it.key(), it.value().get<std::string>());
    if (j.contains("gateway")) {
        m.gateway.provider_calls = j["gateway"].value("provider_calls", uint64_t{0});
        m.gateway.cache_hits = j["gateway"].value("cache_hits", uint64_t{0});
        m.gateway.retries = j["gateway"].value("retries", uint64_t{0});
    }
    m.timestamp = j.value("timestamp", "");
    return m;
}

void require_artifact(const std::string& path, const std::string& producer_command,
                      const RunConfig& config) {
    if (!fs::exists(path)) {
        throw Error("missing input artifact " + path + " - run `" + producer_command + "` first");
    }
    std::string manifest_file = config.manifest_path(producer_command);
    if (fs::exists(manifest_file)) {
        StageManifest m = StageManifest::read(manifest_file);
        if (!m.config_checksum.empty() && m.config_checksum != config.config_checksum) {
            std::cerr << "warning: " << path << " was produced by `" << producer_command
                      << "` under a different config (manifest " << m.config_checksum
                      << ", current " << config.config_checksum << ")\n";
        }
    }
}

}  // namespace benchkit
