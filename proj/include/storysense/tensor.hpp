#pragma once
// Minimal reverse-mode autodiff over row-major double matrices. Values are
// computed eagerly at op creation; backward closures run in reverse creation
// order from the loss. Small models only: clarity and exactness over speed,
// double precision throughout so finite-difference checks are meaningful.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "error.hpp"

namespace storysense {

struct Mat {
    size_t rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return v[r * cols + c]; }
    double at(size_t r, size_t c) const { return v[r * cols + c]; }
    double* row(size_t r) { return v.data() + r * cols; }
    const double* row(size_t r) const { return v.data() + r * cols; }
    size_t size() const { return v.size(); }
};

// C += A * B
inline void mm_acc(const Mat& a, const Mat& b, Mat& c) {
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (size_t k = 0; k < a.cols; ++k) {
            double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A * B^T
inline void mm_nt_acc(const Mat& a, const Mat& b, Mat& c) {
    for (size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double sum = 0.0;
            for (size_t k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
            crow[j] += sum;
        }
    }
}

// C += A^T * B
inline void mm_tn_acc(const Mat& a, const Mat& b, Mat& c) {
    for (size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (size_t i = 0; i < a.cols; ++i) {
            double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row(i);
            for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

struct VarNode;
using Var = std::shared_ptr<VarNode>;

struct VarNode {
    Mat val;
    Mat grad;
    std::vector<Var> prev;
    std::function<void(VarNode&)> back;
    bool needs_grad = true;
};

inline bool& autograd_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

// Disables graph construction in scope (decode-time forward passes).
struct NoGradGuard {
    bool saved;
    NoGradGuard() : saved(autograd_enabled()) { autograd_enabled() = false; }
    ~NoGradGuard() { autograd_enabled() = saved; }
};

inline Var make_leaf(Mat m, bool needs_grad = false) {
    auto node = std::make_shared<VarNode>();
    node->grad = Mat(m.rows, m.cols);
    node->val = std::move(m);
    node->needs_grad = needs_grad;
    return node;
}

inline Var make_op(Mat val, std::vector<Var> prev, std::function<void(VarNode&)> back) {
    auto node = std::make_shared<VarNode>();
    node->grad = Mat(val.rows, val.cols);
    node->val = std::move(val);
    if (autograd_enabled()) {
        node->prev = std::move(prev);
        node->back = std::move(back);
    }
    return node;
}

// Reverse topological sweep from the loss node. Creation order is not
// tracked, so order is rebuilt with an iterative post-order DFS.
inline void backward(const Var& loss) {
    if (loss->val.size() != 1) throw FatalError("backward: loss must be a scalar");
    std::vector<VarNode*> order;
    std::unordered_set<VarNode*> seen;
    std::vector<std::pair<VarNode*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->prev.size()) {
            VarNode* child = node->prev[idx].get();
            ++idx;
            if (seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss->grad.v[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->back) (*it)->back(**it);
}

// ---------------------------------------------------------------------------
// Ops

inline Var matmul(const Var& a, const Var& b) {
    if (a->val.cols != b->val.rows) throw FatalError("matmul: shape mismatch");
    Mat out(a->val.rows, b->val.cols);
    mm_acc(a->val, b->val, out);
    return make_op(std::move(out), {a, b}, [a, b](VarNode& n) {
        mm_nt_acc(n.grad, b->val, a->grad);
        mm_tn_acc(a->val, n.grad, b->grad);
    });
}

// a * b^T
inline Var matmul_nt(const Var& a, const Var& b) {
    if (a->val.cols != b->val.cols) throw FatalError("matmul_nt: shape mismatch");
    Mat out(a->val.rows, b->val.rows);
    mm_nt_acc(a->val, b->val, out);
    return make_op(std::move(out), {a, b}, [a, b](VarNode& n) {
        mm_acc(n.grad, b->val, a->grad);
        mm_tn_acc(n.grad, a->val, b->grad);
    });
}

inline Var add(const Var& a, const Var& b) {
    if (a->val.rows != b->val.rows || a->val.cols != b->val.cols)
        throw FatalError("add: shape mismatch");
    Mat out = a->val;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += b->val.v[i];
    return make_op(std::move(out), {a, b}, [a, b](VarNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.v[i] += n.grad.v[i];
            b->grad.v[i] += n.grad.v[i];
        }
    });
}

// x (R x C) + v (1 x C) broadcast over rows
inline Var add_rowvec(const Var& x, const Var& v) {
    if (v->val.rows != 1 || v->val.cols != x->val.cols)
        throw FatalError("add_rowvec: shape mismatch");
    Mat out = x->val;
    for (size_t r = 0; r < out.rows; ++r)
        for (size_t c = 0; c < out.cols; ++c) out.at(r, c) += v->val.v[c];
    return make_op(std::move(out), {x, v}, [x, v](VarNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) x->grad.v[i] += n.grad.v[i];
        for (size_t r = 0; r < n.grad.rows; ++r)
            for (size_t c = 0; c < n.grad.cols; ++c) v->grad.v[c] += n.grad.at(r, c);
    });
}

inline Var mul_scalar(const Var& a, double s) {
    Mat out = a->val;
    for (auto& x : out.v) x *= s;
    return make_op(std::move(out), {a}, [a, s](VarNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) a->grad.v[i] += s * n.grad.v[i];
    });
}

// GELU, tanh approximation.
inline Var gelu(const Var& a) {
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kA = 0.044715;
    Mat out(a->val.rows, a->val.cols);
    for (size_t i = 0; i < out.size(); ++i) {
        double x = a->val.v[i];
        out.v[i] = 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x)));
    }
    return make_op(std::move(out), {a}, [a](VarNode& n) {
        for (size_t i = 0; i < n.grad.size(); ++i) {
            double x = a->val.v[i];
            double u = kC * (x + kA * x * x * x);
            double t = std::tanh(u);
            double du = kC * (1.0 + 3.0 * kA * x * x);
            double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
            a->grad.v[i] += d * n.grad.v[i];
        }
    });
}

// Per-row layer normalization with learned gain/bias (gamma, beta: 1 x C).
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5) {
    size_t rows = x->val.rows, cols = x->val.cols;
    if (gamma->val.cols != cols || beta->val.cols != cols)
        throw FatalError("layer_norm: parameter shape mismatch");
    Mat out(rows, cols);
    auto xhat = std::make_shared<Mat>(rows, cols);
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x->val.row(r);
        double mean = 0.0;
        for (size_t c = 0; c < cols; ++c) mean += xr[c];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (size_t c = 0; c < cols; ++c) {
            double d = xr[c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (size_t c = 0; c < cols; ++c) {
            double xh = (xr[c] - mean) * inv;
            xhat->at(r, c) = xh;
            out.at(r, c) = gamma->val.v[c] * xh + beta->val.v[c];
        }
    }
    return make_op(std::move(out), {x, gamma, beta}, [x, gamma, beta, xhat, inv_std](VarNode& n) {
        size_t rows = n.grad.rows, cols = n.grad.cols;
        for (size_t r = 0; r < rows; ++r) {
            const double* g = n.grad.row(r);
            const double* xh = xhat->row(r);
            double inv = (*inv_std)[r];
            double sum_gh = 0.0, sum_gh_xh = 0.0;
            for (size_t c = 0; c < cols; ++c) {
                double gh = g[c] * gamma->val.v[c];
                sum_gh += gh;
                sum_gh_xh += gh * xh[c];
                gamma->grad.v[c] += g[c] * xh[c];
                beta->grad.v[c] += g[c];
            }
            double inv_n = 1.0 / static_cast<double>(cols);
            double* xg = x->grad.row(r);
            for (size_t c = 0; c < cols; ++c) {
                double gh = g[c] * gamma->val.v[c];
                xg[c] += inv * (gh - inv_n * sum_gh - xh[c] * inv_n * sum_gh_xh);
            }
        }
    });
}

// Row lookup: out[i] = table[ids[i]]. Backward scatter-adds into the table.
inline Var embedding(const Var& table, const std::vector<int>& ids) {
    Mat out(ids.size(), table->val.cols);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= table->val.rows)
            throw FatalError("embedding: id out of range");
        std::copy(table->val.row(static_cast<size_t>(ids[i])),
                  table->val.row(static_cast<size_t>(ids[i])) + table->val.cols, out.row(i));
    }
    return make_op(std::move(out), {table}, [table, ids](VarNode& n) {
        for (size_t i = 0; i < ids.size(); ++i) {
            double* trow = table->grad.row(static_cast<size_t>(ids[i]));
            const double* grow = n.grad.row(i);
            for (size_t c = 0; c < n.grad.cols; ++c) trow[c] += grow[c];
        }
    });
}

// Softmax per row restricted to columns <= row index (causal attention mask
// for square score matrices).
inline Var causal_softmax(const Var& scores) {
    size_t rows = scores->val.rows, cols = scores->val.cols;
    if (rows != cols) throw FatalError("causal_softmax: square matrix expected");
    Mat out(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        const double* s = scores->val.row(r);
        double mx = s[0];
        for (size_t c = 1; c <= r; ++c) mx = std::max(mx, s[c]);
        double denom = 0.0;
        for (size_t c = 0; c <= r; ++c) denom += std::exp(s[c] - mx);
        for (size_t c = 0; c <= r; ++c) out.at(r, c) = std::exp(s[c] - mx) / denom;
    }
    return make_op(std::move(out), {scores}, [scores](VarNode& n) {
        size_t rows = n.grad.rows;
        for (size_t r = 0; r < rows; ++r) {
            const double* p = n.val.row(r);
            const double* g = n.grad.row(r);
            double dot = 0.0;
            for (size_t c = 0; c <= r; ++c) dot += g[c] * p[c];
            double* sg = scores->grad.row(r);
            for (size_t c = 0; c <= r; ++c) sg[c] += p[c] * (g[c] - dot);
        }
    });
}

inline Var col_slice(const Var& x, size_t start, size_t len) {
    if (start + len > x->val.cols) throw FatalError("col_slice: out of range");
    Mat out(x->val.rows, len);
    for (size_t r = 0; r < out.rows; ++r)
        std::copy(x->val.row(r) + start, x->val.row(r) + start + len, out.row(r));
    return make_op(std::move(out), {x}, [x, start, len](VarNode& n) {
        for (size_t r = 0; r < n.grad.rows; ++r) {
            double* xg = x->grad.row(r) + start;
            const double* g = n.grad.row(r);
            for (size_t c = 0; c < len; ++c) xg[c] += g[c];
        }
    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw FatalError("concat_cols: empty input");
    size_t rows = parts[0]->val.rows, cols = 0;
    for (const auto& p : parts) {
        if (p->val.rows != rows) throw FatalError("concat_cols: row mismatch");
        cols += p->val.cols;
    }
    Mat out(rows, cols);
    size_t offset = 0;
    for (const auto& p : parts) {
        for (size_t r = 0; r < rows; ++r)
            std::copy(p->val.row(r), p->val.row(r) + p->val.cols, out.row(r) + offset);
        offset += p->val.cols;
    }
    std::vector<Var> prev(parts.begin(), parts.end());
    return make_op(std::move(out), prev, [parts](VarNode& n) {
        size_t offset = 0;
        for (const auto& p : parts) {
            for (size_t r = 0; r < n.grad.rows; ++r) {
                const double* g = n.grad.row(r) + offset;
                double* pg = p->grad.row(r);
                for (size_t c = 0; c < p->val.cols; ++c) pg[c] += g[c];
            }
            offset += p->val.cols;
        }
    });
}

// Mean over the row axis: (R x C) -> (1 x C).
inline Var mean_over_rows(const Var& x) {
    size_t rows = x->val.rows, cols = x->val.cols;
    if (rows == 0) throw FatalError("mean_over_rows: empty matrix");
    Mat out(1, cols);
    for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c) out.v[c] += x->val.at(r, c);
    for (size_t c = 0; c < cols; ++c) out.v[c] /= static_cast<double>(rows);
    return make_op(std::move(out), {x}, [x](VarNode& n) {
        double inv = 1.0 / static_cast<double>(x->val.rows);
        for (size_t r = 0; r < x->val.rows; ++r) {
            double* xg = x->grad.row(r);
            for (size_t c = 0; c < n.grad.cols; ++c) xg[c] += inv * n.grad.v[c];
        }
    });
}

// Mean token cross entropy of next-token predictions. logits: (L x V),
// targets[i] is the class for row i; rows with target == ignore_id contribute
// exactly zero. Returns a 1x1 scalar in nats.
inline Var cross_entropy_loss(const Var& logits, const std::vector<int>& targets, int ignore_id) {
    size_t rows = logits->val.rows, cols = logits->val.cols;
    if (targets.size() != rows) throw FatalError("cross_entropy_loss: target length mismatch");
    auto probs = std::make_shared<Mat>(rows, cols);
    size_t counted = 0;
    double total = 0.0;
    for (size_t r = 0; r < rows; ++r) {
        if (targets[r] == ignore_id) continue;
        if (targets[r] < 0 || static_cast<size_t>(targets[r]) >= cols)
            throw FatalError("cross_entropy_loss: target out of range");
        const double* z = logits->val.row(r);
        double mx = z[0];
        for (size_t c = 1; c < cols; ++c) mx = std::max(mx, z[c]);
        double denom = 0.0;
        for (size_t c = 0; c < cols; ++c) denom += std::exp(z[c] - mx);
        double* p = probs->row(r);
        for (size_t c = 0; c < cols; ++c) p[c] = std::exp(z[c] - mx) / denom;
        total += -(z[static_cast<size_t>(targets[r])] - mx - std::log(denom));
        ++counted;
    }
    if (counted == 0) throw FatalError("cross_entropy_loss: no unmasked positions");
    Mat out(1, 1);
    out.v[0] = total / static_cast<double>(counted);
    return make_op(std::move(out), {logits}, [logits, targets, ignore_id, probs, counted](VarNode& n) {
        double scale = n.grad.v[0] / static_cast<double>(counted);
        for (size_t r = 0; r < logits->val.rows; ++r) {
            if (targets[r] == ignore_id) continue;
            const double* p = probs->row(r);
            double* g = logits->grad.row(r);
            for (size_t c = 0; c < logits->val.cols; ++c) g[c] += scale * p[c];
            g[static_cast<size_t>(targets[r])] -= scale;
        }
    });
}

} // namespace storysense
