#include "htap/ch_schema.hpp"

#include <cmath>
#include <random>

namespace htap::ch {

Schema warehouse_schema()
{
    return {int64_column("w_id"), string_column("w_name", 10), float64_column("w_ytd"), int64_column("w_next_o_id")};
}

Schema item_schema() { return {int64_column("i_id"), string_column("i_name", 24), float64_column("i_price")}; }

Schema stock_schema()
{
    return {int64_column("s_key"),      int64_column("s_w_id"), int64_column("s_i_id"),
            int64_column("s_quantity"), int64_column("s_ytd"),  int64_column("s_order_cnt")};
}

Schema orders_schema()
{
    return {int64_column("o_key"), int64_column("o_w_id"), int64_column("o_id"), int64_column("o_ol_cnt"),
            date_column("o_entry_d")};
}

Schema orderline_schema()
{
    return {int64_column("ol_key"),      int64_column("ol_o_key"),    int64_column("ol_w_id"),
            int64_column("ol_number"),   int64_column("ol_i_id"),     int64_column("ol_quantity"),
            float64_column("ol_amount"), date_column("ol_delivery_d")};
}

void LoadConfig::validate() const
{
    if (!(scale_factor > 0) || !std::isfinite(scale_factor))
        throw Error("scale factor must be positive");
    if (!(divisor >= 1) || !std::isfinite(divisor))
        throw Error("scale divisor must be >= 1");
    if (warehouses < 1 || warehouses > 100'000)
        throw Error("warehouse count out of range");
    if (items < 1 || items >= kStockKeySpan)
        throw Error("item count out of range");
    if (initial_stock_min > initial_stock_max)
        throw Error("initial stock range is empty");
}

std::int64_t LoadConfig::initial_orders() const
{
    const double rows = scale_factor * static_cast<double>(kLineItemRowsPerSf) / divisor;
    return static_cast<std::int64_t>(std::floor(rows)) / kLinesPerInitialOrder;
}

void create_schema(Database &db, const LoadConfig &cfg, std::size_t extra_capacity)
{
    cfg.validate();
    if (db.table_count() != 0)
        throw Error("database already holds tables");
    auto opts = [](std::size_t rows) {
        StoreOptions o;
        o.capacity_hint = rows;
        return o;
    };
    const auto orders = static_cast<std::size_t>(cfg.initial_orders());
    db.create_table("warehouse", warehouse_schema(), opts(cfg.warehouses));
    db.create_table("item", item_schema(), opts(cfg.items));
    db.create_table("stock", stock_schema(), opts(cfg.warehouses * cfg.items));
    db.create_table("orders", orders_schema(), opts(orders + extra_capacity / 10));
    db.create_table("orderline", orderline_schema(), opts(orders * kLinesPerInitialOrder + extra_capacity));
}

LoadSummary populate(Database &db, const LoadConfig &cfg)
{
    cfg.validate();
    if (db.table_count() != 5)
        throw Error("populate expects the CH-lite schema");
    std::mt19937_64 rng(cfg.seed);
    auto uniform = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };

    LoadSummary sum;
    const std::int64_t orders = cfg.initial_orders();
    std::vector<std::int64_t> orders_per_wh(cfg.warehouses, 0);
    for (std::int64_t o = 0; o < orders; ++o)
        ++orders_per_wh[o % cfg.warehouses];

    auto &wh = db.table(Warehouse);
    for (std::int64_t w = 1; w <= cfg.warehouses; ++w) {
        wh.insert_committed(Row{w, std::string("wh") + std::to_string(w), 300000.0, orders_per_wh[w - 1] + 1});
        ++sum.warehouses;
    }

    auto &item = db.table(Item);
    std::vector<double> prices(cfg.items + 1);
    for (std::int64_t i = 1; i <= cfg.items; ++i) {
        prices[i] = static_cast<double>(uniform(100, 10000)) / 100.0;
        item.insert_committed(Row{i, std::string("item-") + std::to_string(i), prices[i]});
        ++sum.items;
    }

    auto &stock = db.table(Stock);
    for (std::int64_t w = 1; w <= cfg.warehouses; ++w)
        for (std::int64_t i = 1; i <= cfg.items; ++i) {
            const auto qty = uniform(cfg.initial_stock_min, cfg.initial_stock_max);
            stock.insert_committed(Row{stock_key(w, i), w, i, qty, std::int64_t{0}, std::int64_t{0}});
            sum.quantity_total += qty;
            ++sum.stock;
        }

    auto &ord = db.table(Orders);
    auto &ol = db.table(OrderLine);
    for (std::int64_t w = 1; w <= cfg.warehouses; ++w)
        for (std::int64_t o = 1; o <= orders_per_wh[w - 1]; ++o) {
            const auto okey = order_key(w, o);
            const auto date = kBaseDate + uniform(0, 3650);
            ord.insert_committed(Row{okey, w, o, kLinesPerInitialOrder, date});
            ++sum.orders;
            for (std::int64_t n = 1; n <= kLinesPerInitialOrder; ++n) {
                const auto i = uniform(1, cfg.items);
                const auto qty = uniform(1, 10);
                ol.insert_committed(Row{orderline_key(okey, n), okey, w, n, i, qty,
                                        static_cast<double>(qty) * prices[i], date});
                sum.quantity_total += qty;
                ++sum.orderlines;
            }
        }
    return sum;
}

} // namespace htap::ch
