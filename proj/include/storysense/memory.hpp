#pragma once
// Recurrent memory for the generation model: rows of inference token ids
// padded to a fixed length. Rows are embedded with the jointly trained
// memory embedding at forward time, averaged over the token axis, pruned to
// the top-k rows by cosine similarity against the context vector, and the
// averaged result is projected and added back onto the context.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "error.hpp"

namespace storysense {

struct MemoryBank {
    size_t row_len = 100;   // L^r: maximum inference sequence length
    size_t capacity = 45;   // R^m during training; 0 = dynamic (decoding)
    int pad_id = 0;
    std::vector<std::vector<int>> rows;
    size_t truncated_updates = 0;
    size_t evicted = 0;

    MemoryBank() = default;
    MemoryBank(size_t row_len_, size_t capacity_, int pad_id_)
        : row_len(row_len_), capacity(capacity_), pad_id(pad_id_) {}

    size_t occupancy() const { return rows.size(); }

    // Concatenate one update row. Longer rows are truncated (counted); at
    // capacity the oldest row is evicted (FIFO).
    void push(const std::vector<int>& tokens) {
        std::vector<int> row(row_len, pad_id);
        size_t n = std::min(tokens.size(), row_len);
        if (tokens.size() > row_len) ++truncated_updates;
        std::copy(tokens.begin(), tokens.begin() + static_cast<long>(n), row.begin());
        if (capacity && rows.size() == capacity) {
            rows.erase(rows.begin());
            ++evicted;
        }
        rows.push_back(std::move(row));
    }

    void push_all(const std::vector<std::vector<int>>& updates) {
        for (const auto& u : updates) push(u);
    }
};

// theta_mem: mean over the token axis of an embedded memory tensor
// (R x L^r x H) -> (R x H). The mean divides by L^r, so PAD embeddings
// participate.
inline std::vector<std::vector<double>> memory_summarize(
    const std::vector<std::vector<std::vector<double>>>& embedded) {
    if (embedded.empty()) throw FatalError("memory_summarize: empty memory");
    std::vector<std::vector<double>> out;
    out.reserve(embedded.size());
    for (const auto& row : embedded) {
        if (row.empty()) throw FatalError("memory_summarize: empty row");
        size_t h = row[0].size();
        std::vector<double> mean(h, 0.0);
        for (const auto& tok : row) {
            if (tok.size() != h) throw FatalError("memory_summarize: ragged row");
            for (size_t c = 0; c < h; ++c) mean[c] += tok[c];
        }
        for (auto& x : mean) x /= static_cast<double>(row.size());
        out.push_back(std::move(mean));
    }
    return out;
}

// Cosine similarity with zero-norm vectors defined as similarity 0.
inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Indices of the k most similar memory rows, similarity descending, ties
// resolved toward the lower row index. k > R uses all rows.
inline std::vector<size_t> top_k_rows_by_cosine(const std::vector<double>& ctx,
                                                const std::vector<std::vector<double>>& theta_mem,
                                                size_t k) {
    if (theta_mem.empty()) throw FatalError("top_k_rows_by_cosine: empty memory");
    std::vector<size_t> order(theta_mem.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<double> sims(theta_mem.size());
    for (size_t i = 0; i < theta_mem.size(); ++i) sims[i] = cosine_similarity(ctx, theta_mem[i]);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return a < b;
    });
    order.resize(std::min(k, order.size()));
    return order;
}

// M^o: mean of the top-k memory rows.
inline std::vector<double> memory_retrieve(const std::vector<double>& ctx,
                                           const std::vector<std::vector<double>>& theta_mem,
                                           size_t k) {
    auto picked = top_k_rows_by_cosine(ctx, theta_mem, k);
    std::vector<double> out(theta_mem[0].size(), 0.0);
    for (size_t idx : picked)
        for (size_t c = 0; c < out.size(); ++c) out[c] += theta_mem[idx][c];
    for (auto& x : out) x /= static_cast<double>(picked.size());
    return out;
}

// C^o = C^o + proj(M^o): the projected memory vector is broadcast-added to
// every row of the context representation. Plain-math counterpart of the
// in-graph op used by the model.
inline void reweigh_context(std::vector<std::vector<double>>& context_rows,
                            const std::vector<double>& projected_memory) {
    for (auto& row : context_rows) {
        if (row.size() != projected_memory.size()) throw FatalError("reweigh_context: shape mismatch");
        for (size_t c = 0; c < row.size(); ++c) row[c] += projected_memory[c];
    }
}

} // namespace storysense
