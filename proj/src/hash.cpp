#include "benchkit/hash.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace benchkit {

std::string Fnv1a64::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = state_;
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

uint64_t fnv1a64(std::string_view data) {
    return Fnv1a64().update(data).value();
}

std::string fnv1a64_hex(std::string_view data) {
    return Fnv1a64().update(data).hex();
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for checksum: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64_hex(buf.str());
}

}  // namespace benchkit
