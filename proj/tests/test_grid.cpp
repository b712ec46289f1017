#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chrelax/grid.hpp"
#include "chrelax/rng.hpp"

using namespace chrelax;

namespace {

Field random_field(const GridPtr& g, Lcg64& rng) {
    Field f(g);
    for (double& v : f.values) v = rng.symmetric();
    return f;
}

} // namespace

TEST_CASE("laplacian annihilates constants") {
    auto g = Grid::interval(2.0, 17);
    Field lap = laplacian_apply(constant_field(g, 3.7));
    for (double v : lap.values) REQUIRE(v == 0.0);

    auto g2 = Grid::rectangle(1.0, 2.0, 9, 7);
    Field lap2 = laplacian_apply(constant_field(g2, -1.25));
    for (double v : lap2.values) REQUIRE(v == 0.0);
}

TEST_CASE("laplacian mirror stencil, hand-evaluated 3-node case") {
    // h = 1, v = (0, 1, 0): boundary rows 2(v1 - v0)/h^2, interior standard.
    auto g = Grid::interval(2.0, 3);
    Field v(g);
    v.values = {0.0, 1.0, 0.0};
    Field lap = laplacian_apply(v);
    REQUIRE(lap.values[0] == Catch::Approx(2.0).margin(1e-14));
    REQUIRE(lap.values[1] == Catch::Approx(-2.0).margin(1e-14));
    REQUIRE(lap.values[2] == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("laplacian second-order on the Neumann eigenfunction") {
    const double L = 1.5;
    const double k = M_PI / L;
    auto err_for = [&](int nx) {
        auto g = Grid::interval(L, nx);
        Field v = make_field(g, [&](double x, double) { return std::cos(k * x); });
        Field lap = laplacian_apply(v);
        double e = 0.0;
        for (int i = 0; i < v.size(); ++i)
            e = std::max(e, std::abs(lap.values[i] + k * k * v.values[i]));
        return e;
    };
    const double e1 = err_for(33);
    const double e2 = err_for(65);
    REQUIRE(e1 / e2 == Catch::Approx(4.0).epsilon(0.05));
}

TEST_CASE("inner product: constants exact, eigenfunction orthogonal to 1") {
    const double L = 2.5;
    auto g = Grid::interval(L, 41);
    REQUIRE(inner_product(constant_field(g, 1.0), constant_field(g, 1.0)) ==
            Catch::Approx(L).margin(1e-13));

    Field c = make_field(g, [&](double x, double) { return std::cos(M_PI * x / L); });
    REQUIRE(std::abs(inner_product(constant_field(g, 1.0), c)) <= 1e-12 * L);

    auto g2 = Grid::rectangle(1.5, 0.5, 9, 11);
    REQUIRE(inner_product(constant_field(g2, 1.0), constant_field(g2, 1.0)) ==
            Catch::Approx(0.75).margin(1e-13));
}

TEST_CASE("laplacian is self-adjoint, conservative and negative semidefinite") {
    Lcg64 rng(7);
    for (auto g : {Grid::interval(1.0, 33), Grid::rectangle(1.0, 1.3, 9, 8)}) {
        const Field one = constant_field(g, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            Field a = random_field(g, rng);
            Field b = random_field(g, rng);
            Field la = laplacian_apply(a);
            Field lb = laplacian_apply(b);
            const double sym = inner_product(la, b) - inner_product(a, lb);
            const double scale = norm_l2(la) * norm_l2(b) + norm_l2(a) * norm_l2(lb) + 1e-30;
            REQUIRE(std::abs(sym) / scale <= 1e-12);
            // conservation holds to roundoff of the stencil output
            REQUIRE(std::abs(inner_product(la, one)) <= 1e-13 * (1.0 + norm_l2(la)));
            REQUIRE(inner_product(la, a) <= 1e-12 * (1.0 + norm_l2(la) * norm_l2(a)));
        }
    }
}

TEST_CASE("zero column sums on many random fields") {
    Lcg64 rng(11);
    auto g = Grid::interval(1.0, 65);
    const Field one = constant_field(g, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        Field v = random_field(g, rng);
        Field lv = laplacian_apply(v);
        REQUIRE(std::abs(inner_product(lv, one)) <= 1e-13 * (1.0 + norm_l2(lv)));
    }
}

TEST_CASE("mean: constants, eigenfunction, linearity") {
    auto g = Grid::interval(3.0, 29);
    REQUIRE(mean(constant_field(g, 3.5)) == Catch::Approx(3.5).margin(1e-14));

    Field c = make_field(g, [&](double x, double) { return std::cos(M_PI * x / 3.0); });
    REQUIRE(std::abs(mean(c)) <= 1e-12);

    Lcg64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        Field a = random_field(g, rng);
        Field b = random_field(g, rng);
        const double lhs = mean(a + b);
        const double rhs = mean(a) + mean(b);
        REQUIRE(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("norms: zero, constants, eigenfunction Dirichlet energy") {
    const double L = 1.0;
    auto g = Grid::interval(L, 129);
    FieldNorms z = norms(constant_field(g, 0.0));
    REQUIRE(z.l2 == 0.0);
    REQUIRE(z.linf == 0.0);
    REQUIRE(z.h1_semi == 0.0);

    FieldNorms one = norms(constant_field(g, 1.0));
    REQUIRE(one.l2 == Catch::Approx(std::sqrt(L)).margin(1e-13));
    REQUIRE(one.h1_semi == Catch::Approx(0.0).margin(1e-13));

    const double k = M_PI / L;
    Field c = make_field(g, [&](double x, double) { return std::cos(k * x); });
    const double exact = k * k * L / 2.0;
    const double got = norms(c).h1_semi;
    REQUIRE(got * got == Catch::Approx(exact).epsilon(2e-4)); // O(h^2) at nx = 129
}

TEST_CASE("grid and field validation errors") {
    REQUIRE_THROWS_AS(Grid::interval(1.0, 2), Error);
    auto a = Grid::interval(1.0, 9);
    auto b = Grid::interval(1.0, 11);
    REQUIRE_THROWS_AS(inner_product(Field(a), Field(b)), GridMismatch);
    REQUIRE_THROWS_AS(laplacian_apply(*a, Field(b)), GridMismatch);
}
