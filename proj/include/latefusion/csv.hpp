#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace latefusion::csv {

/// RFC 4180-style reader: comma separated, double-quote quoting, "" escapes.
/// Trailing CR is stripped; a final newline does not produce an empty row.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// One line including the trailing newline; cells are quoted only when needed.
std::string format_row(const std::vector<std::string>& cells);

}  // namespace latefusion::csv
