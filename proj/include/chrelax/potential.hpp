#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "chrelax/errors.hpp"

namespace chrelax {

enum class PotentialKind { Regular, Logarithmic };

/// Double-well potential f = f1 + f2 with a convex f1 and a concave smooth
/// perturbation f2, all derivatives up to third order hand-coded.
///
/// Regular:      f(r) = (r^2 - 1)^2 / 4          on all of R,
///               split f1 = r^4/4, f2 = 1/4 - r^2/2.
/// Logarithmic:  f(r) = (1+r)ln(1+r) + (1-r)ln(1-r) - c1 r^2  on (-1, 1),
///               split f1 = the two-log term,  f2 = -c1 r^2,  c1 > 1.
///
/// The logarithmic f1' blows up at the endpoints, which is what confines the
/// order parameter to (-1, 1); evaluation outside the open interval is a
/// DomainViolation, endpoints included.
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Regular;
    double c1 = 2.0;
    double delta_dom = 1e-9; // minimum distance Newton iterates keep from +-1

    static PotentialSpec regular() { return PotentialSpec{PotentialKind::Regular, 0.0, 0.0}; }

    static PotentialSpec logarithmic(double c1, double delta_dom = 1e-9) {
        if (!(c1 > 1.0)) throw Error("logarithmic potential requires c1 > 1");
        if (!(delta_dom > 0.0 && delta_dom < 0.5))
            throw Error("delta_dom must lie in (0, 0.5)");
        return PotentialSpec{PotentialKind::Logarithmic, c1, delta_dom};
    }

    bool singular() const { return kind == PotentialKind::Logarithmic; }
    double domain_min() const {
        return singular() ? -1.0 : -std::numeric_limits<double>::infinity();
    }
    double domain_max() const {
        return singular() ? 1.0 : std::numeric_limits<double>::infinity();
    }

    void check_domain(double r) const {
        if (singular() && !(r > -1.0 && r < 1.0))
            throw DomainViolation("logarithmic potential evaluated at r = " +
                                  std::to_string(r) + " outside (-1, 1)");
    }

    double f(double r) const { return f1(r) + f2(r); }
    double df(double r) const { return df1(r) + df2(r); }
    double d2f(double r) const { return d2f1(r) + d2f2(r); }
    double d3f(double r) const { return d3f1(r) + d3f2(r); }

    double f1(double r) const {
        check_domain(r);
        if (kind == PotentialKind::Regular) return 0.25 * r * r * r * r;
        return (1.0 + r) * std::log(1.0 + r) + (1.0 - r) * std::log(1.0 - r);
    }
    double df1(double r) const {
        check_domain(r);
        if (kind == PotentialKind::Regular) return r * r * r;
        return std::log((1.0 + r) / (1.0 - r));
    }
    double d2f1(double r) const {
        check_domain(r);
        if (kind == PotentialKind::Regular) return 3.0 * r * r;
        return 2.0 / ((1.0 - r) * (1.0 + r));
    }
    double d3f1(double r) const {
        check_domain(r);
        if (kind == PotentialKind::Regular) return 6.0 * r;
        const double d = (1.0 - r) * (1.0 + r);
        return 4.0 * r / (d * d);
    }

    double f2(double r) const {
        check_domain(r);
        if (kind == PotentialKind::Regular) return 0.25 - 0.5 * r * r;
        return -c1 * r * r;
    }
    double df2(double r) const {
        check_domain(r);
        return (kind == PotentialKind::Regular) ? -r : -2.0 * c1 * r;
    }
    double d2f2(double r) const {
        check_domain(r);
        return (kind == PotentialKind::Regular) ? -1.0 : -2.0 * c1;
    }
    double d3f2(double) const { return 0.0; }

    /// Lipschitz constant of f2' (1 for Regular, 2 c1 for Logarithmic).
    double f2_lipschitz() const {
        return (kind == PotentialKind::Regular) ? 1.0 : 2.0 * c1;
    }
};

enum class PotentialPart { F, F1, F2, DF, DF1, DF2, D2F, D3F };

inline double eval(const PotentialSpec& spec, PotentialPart which, double r) {
    switch (which) {
        case PotentialPart::F: return spec.f(r);
        case PotentialPart::F1: return spec.f1(r);
        case PotentialPart::F2: return spec.f2(r);
        case PotentialPart::DF: return spec.df(r);
        case PotentialPart::DF1: return spec.df1(r);
        case PotentialPart::DF2: return spec.df2(r);
        case PotentialPart::D2F: return spec.d2f(r);
        case PotentialPart::D3F: return spec.d3f(r);
    }
    throw Error("eval: unknown potential part");
}

struct DerivativeReport {
    double fd1, fd2, fd3;       // central-difference estimates from f alone
    double an1, an2, an3;       // analytic derivative values
    double rel1, rel2, rel3;    // relative errors
    double max_rel;
};

/// Cross-checks the hand-coded derivatives against central differences of f.
/// Step sizes grow with the derivative order (and shrink with the distance to
/// the singular endpoints) so that truncation and round-off both stay below
/// 1e-6 relative in double precision; f'' and f''' use the fourth-order
/// 5-point and 7-point stencils for that reason.
inline DerivativeReport check_derivatives(const PotentialSpec& spec, double r) {
    spec.check_domain(r);
    double margin = std::numeric_limits<double>::infinity();
    if (spec.singular()) {
        margin = std::min(1.0 - r, 1.0 + r);
        if (margin < 1e-3)
            throw DomainViolation("check_derivatives needs margin >= 1e-3 from the endpoints");
    }
    const double s1 = std::min(1e-5, 0.005 * margin);
    const double s2 = std::min(1e-4, 0.01 * margin);
    const double s3 = std::min(1e-3, 0.015 * margin);
    auto f = [&](double x) { return spec.f(x); };
    DerivativeReport rep{};
    rep.fd1 = (f(r + s1) - f(r - s1)) / (2.0 * s1);
    rep.fd2 = (-f(r + 2 * s2) + 16 * f(r + s2) - 30 * f(r) + 16 * f(r - s2) - f(r - 2 * s2)) /
              (12.0 * s2 * s2);
    rep.fd3 = (-f(r + 3 * s3) + 8 * f(r + 2 * s3) - 13 * f(r + s3) + 13 * f(r - s3) -
               8 * f(r - 2 * s3) + f(r - 3 * s3)) /
              (8.0 * s3 * s3 * s3);
    rep.an1 = spec.df(r);
    rep.an2 = spec.d2f(r);
    rep.an3 = spec.d3f(r);
    auto rel = [](double fd, double an) {
        const double scale = std::max(std::abs(an), 1.0);
        return std::abs(fd - an) / scale;
    };
    rep.rel1 = rel(rep.fd1, rep.an1);
    rep.rel2 = rel(rep.fd2, rep.an2);
    rep.rel3 = rel(rep.fd3, rep.an3);
    rep.max_rel = std::max(rep.rel1, std::max(rep.rel2, rep.rel3));
    return rep;
}

} // namespace chrelax
