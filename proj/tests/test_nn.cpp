#include <cmath>
#include <functional>

#include "crowd/error.hpp"
#include "crowd/nn/layers.hpp"
#include "crowd/nn/param_store.hpp"
#include "crowd/nn/tape.hpp"
#include "crowd/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crowd;
using namespace crowd::nn;

namespace {

using LossFn = std::function<Var(Tape&)>;

double eval_loss(ParamStore& store, const LossFn& fn) {
    Tape tape(&store, 256);
    return fn(tape).scalar();
}

/// Central differences over every parameter entry against the tape gradient.
void check_gradients(ParamStore& store, const LossFn& fn, double tol = 1e-6) {
    store.zero_grad();
    {
        Tape tape(&store, 256);
        tape.backward(fn(tape));
    }
    const double eps = 1e-5;
    for (ParamStore::Id id = 0; id < store.size(); ++id) {
        for (Eigen::Index i = 0; i < store.value(id).size(); ++i) {
            double& x = store.value(id).data()[i];
            const double saved = x;
            x = saved + eps;
            const double up = eval_loss(store, fn);
            x = saved - eps;
            const double down = eval_loss(store, fn);
            x = saved;
            const double fd = (up - down) / (2 * eps);
            const double g = store.grad(id).data()[i];
            CHECK_MESSAGE(std::abs(fd - g) <= tol * std::max(1.0, std::abs(fd)), store.name(id), "[", i, "] fd ", fd, " tape ", g);
        }
    }
}

ParamStore random_store(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols, int count) {
    Rng rng(seed);
    ParamStore s;
    for (int k = 0; k < count; ++k) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.5, 1.5);
        s.add("p" + std::to_string(k), m);
    }
    return s;
}

}  // namespace

TEST_CASE("every taped op matches finite differences") {
    auto s = random_store(1, 3, 2, 3);
    const std::vector<std::pair<const char*, LossFn>> cases = {
        {"add", [](Tape& t) { return sum(square(t.param(0) + t.param(1))); }},
        {"sub", [](Tape& t) { return sum(square(t.param(0) - t.param(1))); }},
        {"mul", [](Tape& t) { return sum(cwise_mul(t.param(0), t.param(1))); }},
        {"affine", [](Tape& t) { return sum(square(affine(t.param(0), -2.5, 0.3))); }},
        {"sigmoid", [](Tape& t) { return sum(cwise_mul(sigmoid(t.param(0)), t.param(1))); }},
        {"tanh", [](Tape& t) { return sum(cwise_mul(tanh(t.param(0)), t.param(1))); }},
        {"softplus", [](Tape& t) { return sum(cwise_mul(softplus(t.param(0)), t.param(1))); }},
        {"log", [](Tape& t) { return sum(log(softplus(t.param(0)))); }},
        {"exp", [](Tape& t) { return sum(exp(cwise_mul(t.param(0), t.param(1)))); }},
        {"row", [](Tape& t) { return sum(square(row(t.param(2), 1))); }},
        {"matmul", [](Tape& t) {
             const Var a = t.param(0);
             Matrix bt(2, 3);
             bt << 1, -2, 0.5, 0.3, 0.7, -1;
             return sum(square(matmul(t.constant(bt), a)));
         }},
    };
    for (const auto& [name, fn] : cases) {
        CAPTURE(name);
        check_gradients(s, fn);
    }
}

TEST_CASE("add_bias broadcasts a column over samples") {
    ParamStore s;
    s.add("a", Matrix::Ones(2, 3));
    Matrix b(2, 1);
    b << 1, 2;
    s.add("b", b);
    const LossFn fn = [](Tape& t) { return sum(square(add_bias(t.param(0), t.param(1)))); };
    check_gradients(s, fn);
    Tape t(&s);
    const Var out = add_bias(t.param(0), t.param(1));
    CHECK(out.value()(1, 2) == 3.0);
}

TEST_CASE("GRU step on zeros returns zeros; identity-like gates keep h") {
    Rng rng(1);
    ParamStore s;
    auto cell = GruCellSpec::create(s, "g", 2, 3, rng);
    for (ParamStore::Id id = 0; id < s.size(); ++id) s.value(id).setZero();
    CHECK(gru_step(s, cell, Vector::Zero(2), Vector::Zero(3)).isZero(0.0));

    // z = sigma(-large) ~ 0: the state passes through unchanged.
    s.value(cell.b_z).setConstant(-50.0);
    Vector h(3);
    h << 0.3, -0.2, 0.9;
    Vector x(2);
    x << 1.0, -1.0;
    CHECK((gru_step(s, cell, x, h) - h).norm() < 1e-12);
}

TEST_CASE("GRU forward matches the scalar oracle and its gradients match finite differences") {
    Rng rng(7);
    ParamStore s;
    auto cell = GruCellSpec::create(s, "enc", 2, 4, rng);
    Vector x(2), h(4);
    x << 0.4, -1.1;
    h << 0.2, -0.5, 0.1, 0.8;
    const Vector ours = gru_step(s, cell, x, h);
    const auto ref = oracle::gru(s, "enc", {x[0], x[1]}, {h[0], h[1], h[2], h[3]});
    for (int i = 0; i < 4; ++i) CHECK(ours[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-12));

    const LossFn fn = [&](Tape& t) {
        Var hv = t.constant(Matrix(h));
        for (int step = 0; step < 3; ++step) hv = gru_step(cell, t.constant(Matrix(x * (step + 1))), hv);
        return sum(cwise_mul(hv, hv));
    };
    Tape t(&s);
    CHECK(gru_step(cell, t.constant(Matrix(x)), t.constant(Matrix(h))).value().isApprox(ours, 1e-14));
    check_gradients(s, fn);
}

TEST_CASE("MLP taped and plain forwards agree, and gradients match finite differences") {
    Rng rng(3);
    ParamStore s;
    auto mlp = MlpSpec::create(s, "m", {3, 5, 2}, {Activation::Tanh, Activation::Softplus}, rng);
    Matrix x(3, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
    const Matrix plain = mlp_forward(s, mlp, x);
    Tape t(&s);
    CHECK(mlp_forward(mlp, t.constant(x)).value().isApprox(plain, 1e-14));
    CHECK((plain.array() > 0).all());
    check_gradients(s, [&](Tape& tp) { return sum(square(mlp_forward(mlp, tp.constant(x)))); });
    CHECK_THROWS_AS(mlp_forward(s, mlp, Matrix::Zero(2, 1)), Error);
}

TEST_CASE("softplus is strictly positive and stable at extremes") {
    for (double v : {-800.0, -50.0, -1.0, 0.0, 1.0, 50.0, 800.0}) {
        CHECK(softplus(v) > 0.0);
        CHECK(std::isfinite(softplus(v)));
    }
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(800.0) == doctest::Approx(800.0));
    CHECK(softplus(std::log(std::exp(1.0) - 1.0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gradient of the sum of squared weights is twice the weights") {
    auto s = random_store(5, 4, 3, 2);
    Tape t(&s);
    t.backward(sum(square(t.param(0))) + sum(square(t.param(1))));
    CHECK(s.grad(0).isApprox(2.0 * s.value(0)));
    CHECK(s.grad(1).isApprox(2.0 * s.value(1)));
}

TEST_CASE("a constant loss yields zero parameter gradients") {
    auto s = random_store(6, 2, 2, 1);
    Tape t(&s);
    t.param(0);
    t.backward(sum(t.constant(Matrix::Ones(2, 2))));
    CHECK(s.grad(0).isZero(0.0));
}

TEST_CASE("backward rejects a non-finite loss") {
    ParamStore s;
    s.add("a", Matrix::Constant(1, 1, -1.0));
    Tape t(&s);
    CHECK_THROWS_AS(t.backward(sum(log(t.param(0)))), Error);
}

TEST_CASE("Adam: zero gradient leaves parameters, first step moves by about lr") {
    ParamStore s;
    s.add("w", Matrix::Constant(2, 2, 1.0));
    adam_update(s, {.lr = 1e-3});
    CHECK(s.value(0).isApprox(Matrix::Constant(2, 2, 1.0)));

    ParamStore t;
    t.add("w", Matrix::Constant(1, 3, 1.0));
    t.grad(0) << 0.5, -3.0, 1e3;
    adam_update(t, {.lr = 1e-3});
    CHECK(t.value(0)(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(t.value(0)(0, 1) == doctest::Approx(1.0 + 1e-3).epsilon(1e-6));
    CHECK(t.value(0)(0, 2) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(t.grad(0).isZero(0.0));
    CHECK(t.step() == 1);
}

TEST_CASE("Adam converges on a quadratic bowl") {
    ParamStore s;
    s.add("w", Matrix::Constant(3, 1, 1.0));
    Vector target(3);
    target << 0.5, -0.25, 0.75;
    for (int i = 0; i < 500; ++i) {
        Tape t(&s);
        t.backward(sum(square(t.param(0) - t.constant(Matrix(target)))));
        adam_update(s, {.lr = 1e-2});
    }
    CHECK((s.value(0).col(0) - target).norm() < 1e-2);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    Rng rng(9);
    ParamStore s;
    GruCellSpec::create(s, "enc", 2, 3, rng);
    s.add("odd", Matrix::Constant(1, 1, 0.1 + 0.2));
    s.value(0)(0, 0) = 1e-300;
    const auto back = params_from_json(to_json(s));
    REQUIRE(back.size() == s.size());
    for (ParamStore::Id id = 0; id < s.size(); ++id) {
        CHECK(back.name(id) == s.name(id));
        CHECK(back.value(id) == s.value(id));
    }
    CHECK(to_json(back).dump() == to_json(s).dump());

    ParamStore wrong;
    wrong.add("enc.w_z", Matrix::Zero(1, 1));
    CHECK_THROWS_AS(load_values(wrong, to_json(s)), Error);
}
