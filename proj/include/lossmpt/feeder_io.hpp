#pragma once

// Plain-text feeder description.
//
//   # comment
//   [base]
//   <s_base VA> <v_base V>
//   [bus]
//   <id>
//   [source]
//   <bus id> <v0 pu>
//   [branch]
//   <from> <to> <r pu> <x pu> <ampacity pu>
//   [load]
//   <bus> <p pu> <q pu>
//
// Fields are separated by whitespace or commas. Numbers are parsed without
// reference to the C locale.

#include "lossmpt/feeder.hpp"

#include <filesystem>
#include <string_view>

namespace lossmpt {

/// Throws ParseError for syntax problems and TopologyError for invalid networks.
[[nodiscard]] FeederModel parse_feeder(std::string_view text);

/// Throws std::filesystem::filesystem_error when the file cannot be opened.
[[nodiscard]] FeederModel read_feeder_file(const std::filesystem::path& path);

}  // namespace lossmpt
