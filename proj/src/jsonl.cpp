#include "benchkit/jsonl.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "benchkit/errors.hpp"

namespace benchkit {

void for_each_jsonl(std::istream& in,
                    const std::function<void(size_t, const Json&)>& on_record,
                    const std::function<void(size_t, const std::string&)>& on_error) {
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json rec = Json::parse(line, nullptr, false);
        if (rec.is_discarded()) {
            if (on_error) {
                on_error(line_no, "invalid JSON");
                continue;
            }
            throw IngestError("line " + std::to_string(line_no) + ": invalid JSON");
        }
        on_record(line_no, rec);
    }
}

std::vector<Json> read_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);
    std::vector<Json> out;
    for_each_jsonl(in, [&](size_t, const Json& rec) { out.push_back(rec); });
    return out;
}

void write_jsonl_file(const std::string& path, const std::vector<Json>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const auto& rec : records) out << rec.dump() << '\n';
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

}  // namespace benchkit
