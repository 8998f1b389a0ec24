#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "uqsub/basis.hpp"

namespace uqsub {

// Writes through a sibling temporary file and renames it over `path`, so
// readers never see a partial file.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& body);

std::string read_text(const std::filesystem::path& path);

nlohmann::json expansion_to_json(const Expansion& e);
Expansion expansion_from_json(const nlohmann::json& j);

void save_expansion(const Expansion& e, const std::filesystem::path& path);
Expansion load_expansion(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace uqsub
