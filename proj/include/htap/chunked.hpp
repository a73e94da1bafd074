#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>

#include "htap/types.hpp"

namespace htap {

/// Append-only array split into fixed-size chunks behind a preallocated
/// directory. Elements never move, so concurrent readers may keep addresses
/// while a single writer grows the array.
template <class T, std::size_t ChunkSize = 4096, std::size_t MaxChunks = 4096>
class ChunkedArray {
public:
    static constexpr std::size_t kChunk = ChunkSize;
    static constexpr std::size_t kMaxElements = ChunkSize * MaxChunks;

    ChunkedArray() : dir_(new std::atomic<T *>[MaxChunks])
    {
        for (std::size_t i = 0; i < MaxChunks; ++i)
            dir_[i].store(nullptr, std::memory_order_relaxed);
    }
    ~ChunkedArray()
    {
        for (std::size_t i = 0; i < MaxChunks; ++i)
            delete[] dir_[i].load(std::memory_order_relaxed);
    }
    ChunkedArray(const ChunkedArray &) = delete;
    ChunkedArray &operator=(const ChunkedArray &) = delete;

    /// Single-writer growth. Safe against concurrent readers of existing slots.
    void reserve(std::size_t n)
    {
        if (n > kMaxElements)
            throw Error("chunked array capacity exceeded");
        while (chunks_ * kChunk < n) {
            dir_[chunks_].store(new T[kChunk](), std::memory_order_release);
            ++chunks_;
        }
    }

    std::size_t capacity() const { return chunks_ * kChunk; }

    T &operator[](std::size_t i) const
    {
        return dir_[i / kChunk].load(std::memory_order_acquire)[i % kChunk];
    }

private:
    std::unique_ptr<std::atomic<T *>[]> dir_;
    std::size_t chunks_ = 0;
};

/// Fixed-width byte column with chunked growth.
class ChunkedColumn {
public:
    static constexpr std::size_t kChunkRows = 4096;
    static constexpr std::size_t kMaxChunks = 4096;

    explicit ChunkedColumn(std::size_t width) : width_(width), dir_(new std::atomic<std::byte *>[kMaxChunks])
    {
        for (std::size_t i = 0; i < kMaxChunks; ++i)
            dir_[i].store(nullptr, std::memory_order_relaxed);
    }
    ~ChunkedColumn()
    {
        for (std::size_t i = 0; i < kMaxChunks; ++i)
            delete[] dir_[i].load(std::memory_order_relaxed);
    }
    ChunkedColumn(const ChunkedColumn &) = delete;
    ChunkedColumn &operator=(const ChunkedColumn &) = delete;

    void reserve(std::size_t rows)
    {
        if (rows > kChunkRows * kMaxChunks)
            throw Error("column capacity exceeded");
        while (chunks_ * kChunkRows < rows) {
            dir_[chunks_].store(new std::byte[kChunkRows * width_](), std::memory_order_release);
            ++chunks_;
        }
    }

    std::size_t width() const { return width_; }
    std::size_t capacity() const { return chunks_ * kChunkRows; }

    std::byte *cell(RowId row) const
    {
        return dir_[row / kChunkRows].load(std::memory_order_acquire) + (row % kChunkRows) * width_;
    }

private:
    std::size_t width_;
    std::unique_ptr<std::atomic<std::byte *>[]> dir_;
    std::size_t chunks_ = 0;
};

/// One atomic flag per row slot.
class UpdateBitmap {
public:
    void reserve(std::size_t rows) { words_.reserve((rows + 63) / 64); }

    void set(RowId row) { word(row).fetch_or(mask(row), std::memory_order_acq_rel); }
    void clear(RowId row) { word(row).fetch_and(~mask(row), std::memory_order_acq_rel); }
    bool test(RowId row) const
    {
        if (row / 64 >= words_.capacity())
            return false;
        return (word(row).load(std::memory_order_acquire) & mask(row)) != 0;
    }

    /// Number of set bits among rows [0, limit).
    std::size_t count_below(std::size_t limit) const
    {
        std::size_t n = 0;
        for_each_word(limit, [&](std::size_t, std::uint64_t bits) { n += std::popcount(bits); });
        return n;
    }

    /// Calls fn(row) for each set row below limit, in ascending order.
    template <class Fn>
    void for_each_set(std::size_t limit, Fn &&fn) const
    {
        for_each_word(limit, [&](std::size_t base, std::uint64_t bits) {
            while (bits) {
                const int b = std::countr_zero(bits);
                fn(static_cast<RowId>(base + b));
                bits &= bits - 1;
            }
        });
    }

private:
    template <class Fn>
    void for_each_word(std::size_t limit, Fn &&fn) const
    {
        const std::size_t nwords = std::min((limit + 63) / 64, words_.capacity());
        for (std::size_t w = 0; w < nwords; ++w) {
            std::uint64_t bits = words_[w].load(std::memory_order_acquire);
            if (!bits)
                continue;
            const std::size_t base = w * 64;
            if (base + 64 > limit)
                bits &= (limit - base) >= 64 ? ~0ULL : ((1ULL << (limit - base)) - 1);
            if (bits)
                fn(base, bits);
        }
    }

    std::atomic<std::uint64_t> &word(RowId row) const { return words_[row / 64]; }
    static std::uint64_t mask(RowId row) { return 1ULL << (row % 64); }

    ChunkedArray<std::atomic<std::uint64_t>, 1024, 4096> words_;
};

} // namespace htap
