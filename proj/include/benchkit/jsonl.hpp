#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace benchkit {

using Json = nlohmann::json;

// Streams one parsed object per non-empty line. The callback receives the
// 1-based line number. Parse failures are reported through on_error (line,
// message); when on_error is null they throw IngestError instead.
void for_each_jsonl(std::istream& in,
                    const std::function<void(size_t, const Json&)>& on_record,
                    const std::function<void(size_t, const std::string&)>& on_error = nullptr);

std::vector<Json> read_jsonl_file(const std::string& path);

// One compact object per line, '\n' terminated. Key order is alphabetical
// (nlohmann default), so output bytes are stable.
void write_jsonl_file(const std::string& path, const std::vector<Json>& records);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace benchkit
