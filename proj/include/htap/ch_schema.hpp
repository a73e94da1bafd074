#pragma once

#include <cstdint>

#include "htap/database.hpp"

/// CH-lite: the subset of the CH-benchmark schema that the NewOrder workload
/// and the Q1/Q6/Q19 query shapes touch.
namespace htap::ch {

/// Table ordinals. They double as the first component of the global lock order.
enum TableId : std::size_t { Warehouse = 0, Item = 1, Stock = 2, Orders = 3, OrderLine = 4 };

inline constexpr std::int64_t kOrderKeySpan = 10'000'000;
inline constexpr std::int64_t kStockKeySpan = 1'000'000;
inline constexpr std::int64_t kBaseDate = 20'000;       ///< days
inline constexpr std::int64_t kLineItemRowsPerSf = 6'001'215;
inline constexpr std::int64_t kLinesPerInitialOrder = 15;

inline std::int64_t stock_key(std::int64_t warehouse, std::int64_t item) { return warehouse * kStockKeySpan + item; }
inline std::int64_t order_key(std::int64_t warehouse, std::int64_t order) { return warehouse * kOrderKeySpan + order; }
inline std::int64_t orderline_key(std::int64_t okey, std::int64_t number) { return okey * 16 + number; }

Schema warehouse_schema();
Schema item_schema();
Schema stock_schema();
Schema orders_schema();
Schema orderline_schema();

struct LoadConfig {
    double scale_factor = 1.0;
    double divisor = 10'000.0; ///< desk-scale shrink applied to the LineItem cardinality
    std::int64_t warehouses = 4;
    std::int64_t items = 1'000;
    std::uint64_t seed = 42;
    std::int64_t initial_stock_min = 50;
    std::int64_t initial_stock_max = 100;

    void validate() const;
    /// OrderLine rows at load: SF * 6,001,215 / divisor, rounded down to whole orders.
    std::int64_t initial_orders() const;
    std::int64_t initial_orderlines() const { return initial_orders() * kLinesPerInitialOrder; }
};

struct LoadSummary {
    std::int64_t warehouses = 0;
    std::int64_t items = 0;
    std::int64_t stock = 0;
    std::int64_t orders = 0;
    std::int64_t orderlines = 0;
    /// Σ stock quantity + Σ order-line quantity; NewOrder never changes it.
    std::int64_t quantity_total = 0;
};

/// Creates the five tables with capacity hints sized for the load.
void create_schema(Database &db, const LoadConfig &cfg, std::size_t extra_capacity = 0);

/// Deterministic population from cfg.seed. The database must hold the empty schema.
LoadSummary populate(Database &db, const LoadConfig &cfg);

} // namespace htap::ch
