#include <doctest.h>

#include <cmath>
#include <functional>

#include <storysense/tensor.hpp>
#include <storysense/text.hpp>

using namespace storysense;

namespace {

Var rand_leaf(SplitMix64& rng, size_t r, size_t c, bool grad = true) {
    Mat m(r, c);
    for (auto& x : m.v) x = rng.unit() * 2.0 - 1.0;
    return make_leaf(std::move(m), grad);
}

// central finite differences against the analytic gradient, elementwise
void check_grad(const std::function<Var()>& loss_fn, const Var& param, double h = 1e-6,
                double tol = 1e-6) {
    std::fill(param->grad.v.begin(), param->grad.v.end(), 0.0);
    Var loss = loss_fn();
    backward(loss);
    Mat analytic = param->grad;
    for (size_t i = 0; i < param->val.size(); ++i) {
        double saved = param->val.v[i];
        param->val.v[i] = saved + h;
        double up = loss_fn()->val.v[0];
        param->val.v[i] = saved - h;
        double down = loss_fn()->val.v[0];
        param->val.v[i] = saved;
        double fd = (up - down) / (2.0 * h);
        double denom = std::max({std::fabs(fd), std::fabs(analytic.v[i]), 1e-8});
        CHECK(std::fabs(fd - analytic.v[i]) / denom < tol);
    }
}

// sum of squares reduces any matrix to a scalar with simple gradients
Var sum_squares(const Var& x) {
    double total = 0.0;
    for (size_t i = 0; i < x->val.size(); ++i) total += x->val.v[i] * x->val.v[i];
    Mat out(1, 1);
    out.v[0] = total;
    return make_op(std::move(out), {x}, [x](VarNode& n) {
        for (size_t i = 0; i < x->val.size(); ++i) x->grad.v[i] += 2.0 * x->val.v[i] * n.grad.v[0];
    });
}

} // namespace

TEST_CASE("matmul forward") {
    Mat a(2, 3), b(3, 2);
    // [[1,2,3],[4,5,6]] x [[7,8],[9,10],[11,12]] = [[58,64],[139,154]]
    a.v = {1, 2, 3, 4, 5, 6};
    b.v = {7, 8, 9, 10, 11, 12};
    auto out = matmul(make_leaf(a), make_leaf(b));
    CHECK(out->val.v == std::vector<double>{58, 64, 139, 154});
}

TEST_CASE("gradients match finite differences") {
    SplitMix64 rng(5);
    SUBCASE("matmul") {
        auto a = rand_leaf(rng, 3, 4);
        auto b = rand_leaf(rng, 4, 2);
        check_grad([&] { return sum_squares(matmul(a, b)); }, a);
        check_grad([&] { return sum_squares(matmul(a, b)); }, b);
    }
    SUBCASE("matmul_nt") {
        auto a = rand_leaf(rng, 3, 4);
        auto b = rand_leaf(rng, 5, 4);
        check_grad([&] { return sum_squares(matmul_nt(a, b)); }, a);
        check_grad([&] { return sum_squares(matmul_nt(a, b)); }, b);
    }
    SUBCASE("add and add_rowvec") {
        auto a = rand_leaf(rng, 3, 4);
        auto b = rand_leaf(rng, 3, 4);
        auto v = rand_leaf(rng, 1, 4);
        check_grad([&] { return sum_squares(add(a, b)); }, b);
        check_grad([&] { return sum_squares(add_rowvec(a, v)); }, v);
        check_grad([&] { return sum_squares(add_rowvec(a, v)); }, a);
    }
    SUBCASE("gelu") {
        auto a = rand_leaf(rng, 4, 3);
        check_grad([&] { return sum_squares(gelu(a)); }, a, 1e-6, 1e-5);
    }
    SUBCASE("layer_norm") {
        auto x = rand_leaf(rng, 3, 6);
        auto g = rand_leaf(rng, 1, 6);
        auto b = rand_leaf(rng, 1, 6);
        check_grad([&] { return sum_squares(layer_norm(x, g, b)); }, x, 1e-6, 1e-4);
        check_grad([&] { return sum_squares(layer_norm(x, g, b)); }, g);
        check_grad([&] { return sum_squares(layer_norm(x, g, b)); }, b);
    }
    SUBCASE("causal_softmax") {
        auto s = rand_leaf(rng, 4, 4);
        check_grad([&] { return sum_squares(causal_softmax(s)); }, s, 1e-6, 1e-4);
    }
    SUBCASE("embedding") {
        auto table = rand_leaf(rng, 6, 3);
        std::vector<int> ids{1, 4, 1, 0};
        check_grad([&] { return sum_squares(embedding(table, ids)); }, table);
    }
    SUBCASE("col_slice and concat_cols") {
        auto x = rand_leaf(rng, 3, 6);
        check_grad([&] { return sum_squares(col_slice(x, 2, 3)); }, x);
        auto a = rand_leaf(rng, 3, 2);
        auto b = rand_leaf(rng, 3, 3);
        check_grad([&] { return sum_squares(concat_cols({a, b})); }, a);
        check_grad([&] { return sum_squares(concat_cols({a, b})); }, b);
    }
    SUBCASE("mean_over_rows") {
        auto x = rand_leaf(rng, 5, 3);
        check_grad([&] { return sum_squares(mean_over_rows(x)); }, x);
    }
    SUBCASE("cross_entropy_loss") {
        auto logits = rand_leaf(rng, 4, 5);
        std::vector<int> targets{1, 3, 0, 2};
        check_grad([&] { return cross_entropy_loss(logits, targets, -1); }, logits, 1e-6, 1e-5);
    }
    SUBCASE("cross_entropy_loss with masked rows") {
        auto logits = rand_leaf(rng, 4, 5);
        std::vector<int> targets{1, 0, 0, 2};  // rows 1, 2 masked (pad id 0)
        Var loss = cross_entropy_loss(logits, targets, 0);
        backward(loss);
        // masked rows contribute exactly zero gradient
        for (size_t c = 0; c < 5; ++c) {
            CHECK(logits->grad.at(1, c) == 0.0);
            CHECK(logits->grad.at(2, c) == 0.0);
        }
        check_grad([&] { return cross_entropy_loss(logits, targets, 0); }, logits, 1e-6, 1e-5);
    }
}

TEST_CASE("causal softmax masks the future") {
    Mat s(3, 3);
    s.v = {5, 100, 100, 1, 1, 100, 1, 1, 1};
    auto out = causal_softmax(make_leaf(s));
    CHECK(out->val.at(0, 0) == 1.0);
    CHECK(out->val.at(0, 1) == 0.0);
    CHECK(out->val.at(0, 2) == 0.0);
    CHECK(out->val.at(1, 0) == doctest::Approx(0.5));
    CHECK(out->val.at(1, 1) == doctest::Approx(0.5));
    CHECK(out->val.at(1, 2) == 0.0);
    double row2 = out->val.at(2, 0) + out->val.at(2, 1) + out->val.at(2, 2);
    CHECK(row2 == doctest::Approx(1.0));
}

TEST_CASE("backward accumulates into shared leaves") {
    Mat m(1, 2);
    m.v = {3.0, -2.0};
    auto x = make_leaf(m, true);
    // loss = sum((x + x)^2) = 4 * sum(x^2) -> d/dx = 8x
    auto loss = sum_squares(add(x, x));
    backward(loss);
    CHECK(x->grad.v[0] == doctest::Approx(24.0));
    CHECK(x->grad.v[1] == doctest::Approx(-16.0));
}

TEST_CASE("no-grad mode skips graph construction") {
    SplitMix64 rng(8);
    auto a = rand_leaf(rng, 2, 2);
    auto b = rand_leaf(rng, 2, 2);
    Var with_graph = matmul(a, b);
    {
        NoGradGuard ng;
        Var without = matmul(a, b);
        CHECK(without->prev.empty());
        CHECK(without->val.v == with_graph->val.v);
    }
    CHECK(!with_graph->prev.empty());
}
