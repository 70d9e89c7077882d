#pragma once

#include <string>

#include "varshap/trees.hpp"

namespace varshap {

// Versioned JSON round-trip for fitted ensembles. Doubles are emitted with
// shortest-round-trip encoding, so leaf values and thresholds survive
// serialize/parse bit-exactly.
std::string ensemble_to_json(const TreeEnsemble& ensemble);
TreeEnsemble ensemble_from_json(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);
bool file_exists(const std::string& path);
void ensure_directory(const std::string& path);

}  // namespace varshap
