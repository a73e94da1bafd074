#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace htap {

/// Raised for contract violations: schema errors, unknown rows, epoch mismatches.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ColumnKind : std::uint8_t { Int64, Float64, Date, FixedString };

std::string_view to_string(ColumnKind kind);

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Int64;
    std::size_t string_width = 0; ///< bytes, FixedString only

    /// Physical cell width in bytes.
    std::size_t width() const;
    bool numeric() const { return kind != ColumnKind::FixedString; }
    bool integral() const { return kind == ColumnKind::Int64 || kind == ColumnKind::Date; }
};

inline ColumnSchema int64_column(std::string name) { return {std::move(name), ColumnKind::Int64, 0}; }
inline ColumnSchema float64_column(std::string name) { return {std::move(name), ColumnKind::Float64, 0}; }
inline ColumnSchema date_column(std::string name) { return {std::move(name), ColumnKind::Date, 0}; }
inline ColumnSchema string_column(std::string name, std::size_t width)
{
    return {std::move(name), ColumnKind::FixedString, width};
}

using Schema = std::vector<ColumnSchema>;

/// Validates names (non-empty, unique) and kinds; throws Error.
void validate_schema(const Schema &schema);

/// Sum of column widths.
std::size_t row_width(const Schema &schema);

using Value = std::variant<std::int64_t, double, std::string>;
using Row = std::vector<Value>;

/// Checks that `value` can be stored in a column of `column`'s kind.
bool value_matches(const ColumnSchema &column, const Value &value);

std::string to_string(const Value &value);

using RowId = std::size_t;
using CpuId = int;
using Epoch = std::uint64_t;

} // namespace htap
