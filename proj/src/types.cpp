#include "htap/types.hpp"

#include <cstdio>
#include <unordered_set>

namespace htap {

std::string_view to_string(ColumnKind kind)
{
    switch (kind) {
    case ColumnKind::Int64: return "int64";
    case ColumnKind::Float64: return "float64";
    case ColumnKind::Date: return "date";
    case ColumnKind::FixedString: return "string";
    }
    return "unknown";
}

std::size_t ColumnSchema::width() const
{
    return kind == ColumnKind::FixedString ? string_width : sizeof(std::int64_t);
}

void validate_schema(const Schema &schema)
{
    if (schema.empty())
        throw Error("schema must contain at least one column");
    std::unordered_set<std::string> seen;
    for (const auto &col : schema) {
        if (col.name.empty())
            throw Error("column name must not be empty");
        if (!seen.insert(col.name).second)
            throw Error("duplicate column name: " + col.name);
        switch (col.kind) {
        case ColumnKind::Int64:
        case ColumnKind::Float64:
        case ColumnKind::Date:
            break;
        case ColumnKind::FixedString:
            if (col.string_width == 0)
                throw Error("fixed-width string column needs a width: " + col.name);
            break;
        default:
            throw Error("unsupported column kind for " + col.name);
        }
    }
}

std::size_t row_width(const Schema &schema)
{
    std::size_t w = 0;
    for (const auto &c : schema)
        w += c.width();
    return w;
}

bool value_matches(const ColumnSchema &column, const Value &value)
{
    switch (column.kind) {
    case ColumnKind::Int64:
    case ColumnKind::Date:
        return std::holds_alternative<std::int64_t>(value);
    case ColumnKind::Float64:
        return std::holds_alternative<double>(value);
    case ColumnKind::FixedString:
        return std::holds_alternative<std::string>(value) &&
               std::get<std::string>(value).size() <= column.string_width;
    }
    return false;
}

std::string to_string(const Value &value)
{
    if (auto i = std::get_if<std::int64_t>(&value))
        return std::to_string(*i);
    if (auto d = std::get_if<double>(&value)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", *d);
        return buf;
    }
    return std::get<std::string>(value);
}

} // namespace htap
