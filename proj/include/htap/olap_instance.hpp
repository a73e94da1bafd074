#pragma once

#include <memory>
#include <string>
#include <vector>

#include "htap/database.hpp"

namespace htap {

/// OLAP-private columnar copy of one table. Rows below the watermark were
/// copied by the last ETL.
class OlapTable {
public:
    OlapTable(std::string name, Schema schema, std::size_t capacity_hint);

    const std::string &name() const { return name_; }
    const Schema &schema() const { return schema_; }
    std::size_t watermark() const { return watermark_; }

    const std::byte *cell(RowId row, std::size_t col) const { return columns_[col]->cell(row); }
    std::byte *cell(RowId row, std::size_t col) { return columns_[col]->cell(row); }
    Value get(RowId row, std::size_t col) const;

    void reserve(std::size_t rows);
    void set_watermark(std::size_t rows);

private:
    std::string name_;
    Schema schema_;
    std::vector<std::unique_ptr<ChunkedColumn>> columns_;
    std::size_t watermark_ = 0;
};

class OlapInstance {
public:
    /// Empty copies of every table of `db`, in ordinal order.
    explicit OlapInstance(const Database &db);

    std::size_t table_count() const { return tables_.size(); }
    OlapTable &table(std::size_t ordinal) { return *tables_.at(ordinal); }
    const OlapTable &table(std::size_t ordinal) const { return *tables_.at(ordinal); }
    const OlapTable &table(const std::string &name) const;

    Epoch epoch_synced() const { return epoch_synced_; }
    void set_epoch_synced(Epoch e) { epoch_synced_ = e; }
    /// Bytes held below the watermarks.
    std::uint64_t bytes() const;

private:
    std::vector<std::unique_ptr<OlapTable>> tables_;
    Epoch epoch_synced_ = 0;
};

} // namespace htap
