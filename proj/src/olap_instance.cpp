#include "htap/olap_instance.hpp"

namespace htap {

OlapTable::OlapTable(std::string name, Schema schema, std::size_t capacity_hint)
    : name_(std::move(name)), schema_(std::move(schema))
{
    for (const auto &c : schema_)
        columns_.push_back(std::make_unique<ChunkedColumn>(c.width()));
    reserve(std::max<std::size_t>(capacity_hint, 1));
}

Value OlapTable::get(RowId row, std::size_t col) const { return decode_cell(schema_[col], cell(row, col)); }

void OlapTable::reserve(std::size_t rows)
{
    for (auto &c : columns_)
        if (rows > c->capacity())
            c->reserve(rows);
}

void OlapTable::set_watermark(std::size_t rows)
{
    if (rows < watermark_)
        throw Error("OLAP watermark of " + name_ + " cannot move backwards");
    watermark_ = rows;
}

OlapInstance::OlapInstance(const Database &db)
{
    for (std::size_t i = 0; i < db.table_count(); ++i) {
        const auto &t = db.table(i);
        tables_.push_back(std::make_unique<OlapTable>(t.name(), t.schema(), t.physical_rows()));
    }
}

const OlapTable &OlapInstance::table(const std::string &name) const
{
    for (const auto &t : tables_)
        if (t->name() == name)
            return *t;
    throw Error("unknown OLAP table " + name);
}

std::uint64_t OlapInstance::bytes() const
{
    std::uint64_t n = 0;
    for (const auto &t : tables_)
        n += static_cast<std::uint64_t>(t->watermark()) * row_width(t->schema());
    return n;
}

} // namespace htap
