#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace visitscope::csv {

/// Splits one CSV record. Double-quoted fields may contain the delimiter and
/// `""` escapes. Returns false on an unterminated quote.
bool split_record(std::string_view line, char delim, std::vector<std::string>& fields);

/// Quotes a field only when it needs it.
std::string escape(std::string_view field, char delim = ',');

/// Formats a double with a fixed number of decimals; "-0.000000" is folded to "0.000000".
std::string fixed(double v, int decimals);

/// Shortest representation that round-trips exactly.
std::string exact(double v);

std::string_view trim(std::string_view s);

}  // namespace visitscope::csv
