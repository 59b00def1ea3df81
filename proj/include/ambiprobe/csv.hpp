#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 reader/writer: comma separated, double-quote escaping,
// quoted fields may span lines. CRLF and LF are both accepted.
namespace ambiprobe::csv {

using Row = std::vector<std::string>;

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws ParseError on an
  /// unterminated quoted field.
  std::optional<Row> next();

  /// 1-based index of the record most recently returned.
  std::size_t record_number() const noexcept { return record_; }

 private:
  std::istream& in_;
  std::size_t record_ = 0;
};

std::vector<Row> read_all(std::istream& in);

/// Quotes the field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

}  // namespace ambiprobe::csv
