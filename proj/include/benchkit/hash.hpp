#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace benchkit {

// FNV-1a, 64-bit. Used for content-addressed ids, cache keys and artifact
// checksums; stable across platforms and runs (std::hash is not).
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view data) {
        for (unsigned char c : data) {
            state_ ^= c;
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }

    // Separator byte between fields so ("ab","c") != ("a","bc").
    Fnv1a64& field(std::string_view data) {
        update(data);
        const char sep = '\x1f';
        return update(std::string_view(&sep, 1));
    }

    uint64_t value() const { return state_; }
    std::string hex() const;

private:
    uint64_t state_ = 0xcbf29ce484222325ull;
};

uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Checksum of a file's raw bytes, as 16 hex chars. Throws on missing file.
std::string file_checksum(const std::string& path);

}  // namespace benchkit
