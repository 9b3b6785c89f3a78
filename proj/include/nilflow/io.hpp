#pragma once

#include "nilflow/algebra.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace nilflow {

/// {"m","N","step","omega","alpha","v_bracket"} with nested arrays [i][j][k].
nlohmann::json spec_to_json(const ExtensionSpec& spec);

/// Parses the interchange document. Throws SpecError naming the offending field.
ExtensionSpec spec_from_json(const nlohmann::json& doc);

ExtensionSpec read_spec_file(const std::string& path);
void write_spec_file(const ExtensionSpec& spec, const std::string& path);

/// Hex SHA-256 of the canonical (sorted-key, compact) spec document.
std::string spec_hash(const ExtensionSpec& spec);

std::string sha256_hex(const std::string& data);

/// Comma-separated decimals, w-part then v-part.
Element parse_element_csv(const std::string& text, int m, int n);
std::string element_to_csv(const Element& x);

/// Shortest decimal that round-trips the double.
std::string format_double(double x);

nlohmann::json validation_to_json(const ValidationReport& rep);

}  // namespace nilflow
