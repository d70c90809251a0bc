// Apache License, Version 2.0, refer to LICENSE.txt

// Minimal RFC 4180 reader/writer: comma separated, double-quote quoting,
// CRLF or LF line endings.

#pragma once

#include <istream>
#include <string>
#include <vector>

namespace ihrm::csv {

using Row = std::vector<std::string>;

// Reads every record. Blank lines are skipped. Throws std::runtime_error on
// an unterminated quote.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::string& path);

std::string escape(const std::string& field);
std::string format_row(const Row& row);

}  // namespace ihrm::csv
