#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vdlab {

/// Renders rows as an aligned text table. The first row is the header.
/// `align` holds one 'l' or 'r' per column; columns are separated by two
/// spaces and lines never carry trailing blanks.
std::string format_table(const std::vector<std::vector<std::string>>& rows,
                         std::string_view align);

/// Joins one CSV row, quoting fields that need it.
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace vdlab
