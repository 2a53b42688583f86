#pragma once

#include <string>

namespace benchkit {

// Canonical system instructions, shipped verbatim as versioned files under
// templates/. The constants here are the source of truth; load_template()
// verifies a file on disk still matches before a run uses it.

// Seven-criteria prompt quality instruction for the annotator.
extern const char* const kAnnotatorSystemInstruction;

// Pairwise chain-of-thought judge instruction (5-point verdict labels).
extern const char* const kJudgeSystemInstruction;

// Topic naming instruction (cluster summarization).
extern const char* const kNamingSystemInstruction;

// Default system prompt for answer generation.
extern const char* const kAnswerSystemInstruction;

// Reads the file and checks it byte-matches `expected`; throws ConfigError
// on drift so a run can never silently use an edited instruction.
std::string load_template(const std::string& path, const std::string& expected);

}  // namespace benchkit
