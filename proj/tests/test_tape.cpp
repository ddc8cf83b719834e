#include <catch2/catch_amalgamated.hpp>

#include "fsoda/core/rng.hpp"
#include "fsoda/core/serialize.hpp"
#include "fsoda/core/tape.hpp"
#include "support/gradcheck.hpp"

using namespace fsoda;
using fsoda::testing::check_gradients;

TEST_CASE("tensor basics") {
    Tensor t{{1, 2}, {3, 4}};
    REQUIRE(t(0, 1) == 2.0);
    REQUIRE(t.transposed()(1, 0) == 2.0);
    Tensor c = matmul(t, Tensor::identity(2));
    REQUIRE(c == t);
}

TEST_CASE("rng determinism and moments") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());

    Rng r(7);
    double mean = 0, var = 0;
    const int n = 200000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = r.normal();
        mean += xs[i];
    }
    mean /= n;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;
    REQUIRE(std::fabs(mean) < 0.02);
    REQUIRE(std::fabs(var - 1.0) < 0.02);

    Rng base(3);
    Rng f1 = base.fork("a"), f2 = base.fork("b");
    REQUIRE(f1.next_u64() != f2.next_u64());
}

TEST_CASE("rng state round-trip") {
    Rng r(99);
    r.normal();
    const std::string state = r.save_state();
    const double next = r.normal();
    Rng r2(0);
    r2.load_state(state);
    REQUIRE(r2.normal() == next);
}

TEST_CASE("tape forward values") {
    Tape t;
    Var a = t.constant(Tensor{{1, 2}, {3, 4}});
    Var b = t.constant(Tensor{{1, 0}, {0, 1}});
    REQUIRE(t.value(t.matmul(a, b)) == t.value(a));
    REQUIRE(t.value(t.sum(a))(0, 0) == 10.0);
    REQUIRE(t.value(t.mean_all(a))(0, 0) == 2.5);
    REQUIRE(t.value(t.logsumexp_rows(t.constant(Tensor{{0, 0}})))(0, 0) == Catch::Approx(std::log(2.0)));

    Var d = t.pairwise_sqdist(t.constant(Tensor{{0, 0}}), t.constant(Tensor{{0, 0}, {1, 0}, {0, 1}, {1, 1}}));
    REQUIRE(t.value(d)(0, 0) == 0.0);
    REQUIRE(t.value(d)(0, 1) == 1.0);
    REQUIRE(t.value(d)(0, 3) == 2.0);

    Var cs = t.cosine_rows(t.constant(Tensor{{1, 0}, {1, 1}}), t.constant(Tensor{{0, 1}, {1, 1}}));
    REQUIRE(t.value(cs)(0, 0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(t.value(cs)(1, 0) == Catch::Approx(1.0));

    REQUIRE_THROWS_AS(t.cosine_rows(t.constant(Tensor{{0, 0}}), t.constant(Tensor{{1, 0}})), NumericError);
}

TEST_CASE("tape gradients match finite differences") {
    Rng rng(11);
    const auto randp = [&](const char* n, int r, int c) { return Param(n, rng.normal_tensor(r, c)); };

    SECTION("matmul chain with nonlinearities") {
        Param w1 = randp("w1", 4, 5), w2 = randp("w2", 5, 3), b = randp("b", 1, 3);
        Param x = randp("x", 6, 4);
        auto build = [&](Tape& t) {
            Var h = t.leaky_relu(t.matmul(t.param(x), t.param(w1)), 0.1);
            Var o = t.add_rowvec(t.matmul(h, t.param(w2)), t.param(b));
            return t.mean_all(t.square(o));
        };
        REQUIRE(check_gradients({&w1, &w2, &b, &x}, build) < 1e-7);
    }

    SECTION("reductions, broadcast, exp/log/sqrt") {
        Param a = randp("a", 3, 4);
        Param v = randp("v", 1, 4);
        auto build = [&](Tape& t) {
            Var m = t.mul_rowvec(t.param(a), t.param(v));
            Var s = t.softplus(m);
            Var z = t.log_(t.add_scalar(t.square(s), 1.0));
            Var r = t.sqrt_(t.add_scalar(t.row_sum(z), 0.5));
            return t.sum(r);
        };
        REQUIRE(check_gradients({&a, &v}, build) < 1e-7);
    }

    SECTION("gather, concat, pick, logsumexp") {
        Param a = randp("a", 5, 3);
        auto build = [&](Tape& t) {
            Var g = t.gather_rows(t.param(a), {0, 2, 2, 4});
            Var c = t.concat_rows({g, t.slice_rows(t.param(a), 1, 2)});
            Var lse = t.logsumexp_rows(c);
            Var p = t.pick(c, {0, 1, 2, 0, 1, 2});
            return t.add(t.mean_all(lse), t.mean_all(p));
        };
        REQUIRE(check_gradients({&a}, build) < 1e-7);
    }

    SECTION("pairwise sqdist and cosine") {
        Param a = randp("a", 3, 4), b2 = randp("b", 2, 4);
        Param c1 = randp("c1", 3, 4), c2 = randp("c2", 3, 4);
        auto build = [&](Tape& t) {
            Var d = t.pairwise_sqdist(t.param(a), t.param(b2));
            Var cs = t.cosine_rows(t.param(c1), t.param(c2));
            return t.add(t.mean_all(d), t.mean_all(cs));
        };
        REQUIRE(check_gradients({&a, &b2, &c1, &c2}, build) < 1e-7);
    }

    SECTION("div, clamp_min, transpose, concat_cols") {
        Param a = randp("a", 3, 3), b2 = randp("b", 3, 3);
        // keep denominators away from zero
        for (size_t i = 0; i < b2.value.size(); ++i) b2.value[i] = 2.0 + 0.1 * b2.value[i];
        auto build = [&](Tape& t) {
            Var q = t.div(t.param(a), t.param(b2));
            Var cl = t.clamp_min(q, -0.2);
            Var tc = t.concat_cols({cl, t.transpose(t.param(a))});
            return t.mean_all(t.square(tc));
        };
        REQUIRE(check_gradients({&a, &b2}, build) < 1e-6);
    }
}

TEST_CASE("detach cuts gradients") {
    Param x("x", Tensor{{2.0}});
    x.zero_grad();
    Tape t;
    Var v = t.param(x);
    Var loss = t.sum(t.mul(t.detach(v), v));  // d/dx [c*x] = c = 2
    t.backward(loss);
    REQUIRE(x.grad(0, 0) == 2.0);
}

TEST_CASE("param used twice accumulates both paths") {
    Param x("x", Tensor{{3.0}});
    x.zero_grad();
    Tape t;
    Var a = t.param(x);
    Var b = t.param(x);
    t.backward(t.sum(t.mul(a, b)));  // x^2 -> 2x = 6
    REQUIRE(x.grad(0, 0) == 6.0);
}

TEST_CASE("tensor file round-trip is bit exact") {
    Rng rng(5);
    TensorFile tf;
    Tensor a = rng.normal_tensor(7, 3);
    a(0, 0) = 1.0 / 3.0;  // a value with a non-terminating binary-printable decimal
    tf.put("layer.w", a);
    tf.put("layer.b", rng.normal_tensor(1, 3));
    const std::string path = "/tmp/fsoda_test_tensors.bin";
    tf.save(path);
    TensorFile back = TensorFile::load(path);
    REQUIRE(back.get("layer.w") == a);
    REQUIRE(back.count() == 2);
    REQUIRE_THROWS_AS(back.get("nope"), DataError);
}
