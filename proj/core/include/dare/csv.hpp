#pragma once

// Minimal RFC 4180 reading and writing.

#include <string>
#include <string_view>
#include <vector>

namespace dare::csv {

using Record = std::vector<std::string>;

// Parses CRLF- or LF-terminated records with quoted fields. Throws dare::Error
// on an unterminated quote. A trailing empty line is ignored.
std::vector<Record> parse(std::string_view text);

// Quotes the field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

// Appends one record terminated by CRLF.
void append_record(std::string& out, const std::vector<std::string>& fields);

}  // namespace dare::csv
