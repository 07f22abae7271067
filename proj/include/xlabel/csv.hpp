#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace xlabel::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

/// RFC 4180 style: comma separated, '"' quoting with "" escapes, CRLF or LF
/// line ends, quoted fields may span lines. Blank lines are skipped.
/// Throws CsvError on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes the field when it holds a comma, quote or line break.
std::string escape(std::string_view field);

/// Shortest decimal that reads back as the same double.
std::string format_number(double value);

} // namespace xlabel::csv
