#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chrelax/potential.hpp"
#include "chrelax/rng.hpp"

using namespace chrelax;

TEST_CASE("regular potential values and derivatives") {
    PotentialSpec reg = PotentialSpec::regular();
    REQUIRE(reg.f(0.0) == Catch::Approx(0.25).margin(1e-15));
    REQUIRE(reg.df(1.0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(reg.df(-1.0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(reg.d2f(0.0) == Catch::Approx(-1.0).margin(1e-15));
    REQUIRE(reg.d3f(1.0) == Catch::Approx(6.0).margin(1e-15));
    // split adds back to the whole
    for (double r : {-2.0, -0.3, 0.0, 0.9, 3.0}) {
        REQUIRE(reg.f1(r) + reg.f2(r) ==
                Catch::Approx(0.25 * (r * r - 1.0) * (r * r - 1.0)).margin(1e-14));
    }
    REQUIRE(eval(reg, PotentialPart::DF, 0.3) == Catch::Approx(0.027 - 0.3).margin(1e-15));
}

TEST_CASE("logarithmic potential values and derivatives") {
    PotentialSpec log2p = PotentialSpec::logarithmic(2.0);
    // f near the endpoint matches the closure value 2 ln 2 - c1
    const double limit = 2.0 * std::log(2.0) - 2.0;
    REQUIRE(log2p.f(1.0 - 1e-8) == Catch::Approx(limit).margin(1e-6));
    // f'(0.5) = ln 3 - 2 c1 * 0.5
    REQUIRE(log2p.df(0.5) == Catch::Approx(std::log(3.0) - 2.0).margin(1e-12));
    // f''(0) = 2 - 2 c1
    REQUIRE(log2p.d2f(0.0) == Catch::Approx(-2.0).margin(1e-15));
    REQUIRE_THROWS_AS(log2p.f(1.0), DomainViolation);
    REQUIRE_THROWS_AS(log2p.df(-1.0), DomainViolation);
    REQUIRE_THROWS_AS(log2p.d2f(1.5), DomainViolation);
    REQUIRE_THROWS_AS(PotentialSpec::logarithmic(0.5), Error);
}

TEST_CASE("derivative cross-check against central differences") {
    PotentialSpec reg = PotentialSpec::regular();
    DerivativeReport rep = check_derivatives(reg, 0.3);
    REQUIRE(rep.an1 == Catch::Approx(0.027 - 0.3).margin(1e-15));
    REQUIRE(rep.max_rel <= 1e-6);
    REQUIRE(check_derivatives(reg, 0.0).rel1 <= 1e-9); // odd function: f'(0) = 0

    PotentialSpec lg = PotentialSpec::logarithmic(2.0);
    REQUIRE(check_derivatives(lg, 0.0).max_rel <= 1e-6);
    REQUIRE(check_derivatives(lg, 0.5).max_rel <= 1e-6);
    REQUIRE(check_derivatives(lg, -0.8).max_rel <= 1e-6);
    REQUIRE_THROWS_AS(check_derivatives(lg, 1.0 - 1e-5), DomainViolation);
}

TEST_CASE("convex part, splitting constants and Lipschitz bound") {
    Lcg64 rng(5);
    PotentialSpec reg = PotentialSpec::regular();
    PotentialSpec lg = PotentialSpec::logarithmic(1.5);
    REQUIRE(reg.f1(0.0) == 0.0);
    REQUIRE(lg.f1(0.0) == 0.0);
    for (int i = 0; i < 1000; ++i) {
        const double r_reg = 6.0 * rng.symmetric();
        REQUIRE(reg.d2f1(r_reg) >= 0.0);
        const double r_log = 0.999 * rng.symmetric();
        REQUIRE(lg.d2f1(r_log) >= 0.0);
    }
    // sampled difference quotients of f2' never exceed the Lipschitz constant
    for (int i = 0; i < 200; ++i) {
        const double a = 0.95 * rng.symmetric();
        const double b = 0.95 * rng.symmetric();
        if (a == b) continue;
        const double q_reg = std::abs((reg.df2(a) - reg.df2(b)) / (a - b));
        REQUIRE(q_reg <= reg.f2_lipschitz() + 1e-9);
        const double q_log = std::abs((lg.df2(a) - lg.df2(b)) / (a - b));
        REQUIRE(q_log <= lg.f2_lipschitz() + 1e-9);
    }
}

TEST_CASE("logarithmic f1' blows up monotonically toward the endpoint") {
    PotentialSpec lg = PotentialSpec::logarithmic(2.0);
    double prev = 0.0;
    for (int k = 2; k <= 12; ++k) {
        const double v = lg.df1(1.0 - std::pow(10.0, -k));
        REQUIRE(v > prev);
        prev = v;
    }
    REQUIRE(prev > 20.0); // ~ ln(2 * 10^12)
}
