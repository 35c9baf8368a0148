#include "doctest.h"

#include "lossmpt/errors.hpp"
#include "lossmpt/twobus.hpp"
#include "support.hpp"

#include <cmath>
#include <complex>

using namespace lossmpt;
using doctest::Approx;

namespace {

// Physical single-line circuit: the generator current flows towards the
// source, so Vg = V0 + Z conj(Sg / Vg).
std::complex<double> fixed_point_vg(const ComplexPower& sg, const Impedance& z, double v0)
{
    const std::complex<double> s = sg.as_complex();
    const std::complex<double> zc = z.as_complex();
    std::complex<double> vg{v0, 0.0};
    for (int k = 0; k < 20000; ++k) {
        const auto next = v0 + zc * std::conj(s / vg);
        if (std::abs(next - vg) < 1e-15) {
            return next;
        }
        vg = next;
    }
    return {std::nan(""), 0.0};
}

}  // namespace

TEST_CASE("impedance and power accessors")
{
    CHECK(Impedance{3.0, 4.0}.magnitude() == Approx(5.0));
    CHECK(Impedance{0.1, 0.2}.lambda() == Approx(0.5));
    CHECK(std::isinf(Impedance{1.0, 0.0}.lambda()));
    CHECK(ComplexPower{3.0, -4.0}.magnitude() == Approx(5.0));
    CHECK(ComplexPower{3.0, -4.0}.power_factor() == Approx(0.6));
    CHECK(ComplexPower{}.power_factor() == 1.0);
    CHECK(ComplexPower{-1.0, 0.0}.power_factor() == 1.0);
}

TEST_CASE("rotate examples")
{
    auto a = rotate({1.0, 0.0}, {1.0, 0.0});
    CHECK(a.p_t == Approx(1.0));
    CHECK(a.q_t == Approx(0.0));

    auto b = rotate({0.0, 1.0}, {0.0, 1.0});
    CHECK(b.p_t == Approx(1.0));
    CHECK(b.q_t == Approx(0.0));

    const std::complex<double> oracle = std::complex<double>(0.5, -0.2) * std::conj(std::complex<double>(0.3, 0.4));
    auto c = rotate({0.5, -0.2}, {0.3, 0.4});
    CHECK(c.p_t == Approx(oracle.real()).epsilon(1e-14));
    CHECK(c.q_t == Approx(oracle.imag()).epsilon(1e-14));
    CHECK(c.p_t == Approx(0.07));
    CHECK(c.q_t == Approx(-0.26));

    CHECK_THROWS_AS((void)rotate({1.0, 0.0}, {0.0, 0.0}), DegenerateImpedance);
    CHECK_THROWS_AS((void)rotate({1.0, 0.0}, {-0.1, 0.2}), DegenerateImpedance);
}

TEST_CASE("unrotate examples")
{
    const Impedance z{0.5, 0.5};
    auto back = unrotate(rotate({0.7, -0.3}, z), z);
    CHECK(back.p == Approx(0.7).epsilon(1e-12));
    CHECK(back.q == Approx(-0.3).epsilon(1e-12));

    auto unit = unrotate({1.0, 0.0}, {1.0, 0.0});
    CHECK(unit.p == Approx(1.0));
    CHECK(unit.q == Approx(0.0));

    const Impedance diag{0.70711, 0.70711};
    const auto oracle = std::complex<double>(0.37407, -0.74953) / std::conj(diag.as_complex());
    auto sg = unrotate({0.37407, -0.74953}, diag);
    CHECK(sg.p == Approx(oracle.real()).epsilon(1e-12));
    CHECK(sg.q == Approx(oracle.imag()).epsilon(1e-12));
    CHECK(sg.p == Approx(0.79451).epsilon(1e-4));
    CHECK(sg.q == Approx(-0.26550).epsilon(1e-4));

    CHECK_THROWS_AS((void)unrotate({1.0, 0.0}, {0.0, 0.0}), DegenerateImpedance);
}

TEST_CASE("rotate and unrotate round trip")
{
    testing::Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto z = rng.impedance(1e-3, 10.0);
        const ComplexPower s{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const auto back = unrotate(rotate(s, z), z);
        REQUIRE(std::abs(back.p - s.p) < 1e-12);
        REQUIRE(std::abs(back.q - s.q) < 1e-12);

        const RotatedPower st{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const auto again = rotate(unrotate(st, z), z);
        REQUIRE(std::abs(again.p_t - st.p_t) < 1e-12);
        REQUIRE(std::abs(again.q_t - st.q_t) < 1e-12);
    }
}

TEST_CASE("solve examples")
{
    auto open = solve({0.0, 0.0}, 1.0, Branch::HighVoltage);
    CHECK(open.vg_sq == Approx(1.0));
    CHECK(open.losses_t == Approx(0.0));

    auto shorted = solve({0.0, 0.0}, 1.0, Branch::LowVoltage);
    CHECK(shorted.vg_sq == Approx(0.0));
    CHECK(shorted.losses_t == Approx(1.0));
    CHECK(shorted.branch == Branch::LowVoltage);

    const RotatedPower sg_t{0.37407, -0.74953};
    auto marginal = solve(sg_t, 1.0, Branch::HighVoltage);
    CHECK(marginal.vg_sq == Approx(1.1236).epsilon(1e-5));
    const double v = marginal.vg_sq;
    CHECK(std::abs(v * v - (1.0 + 2.0 * sg_t.p_t) * v + sg_t.p_t * sg_t.p_t + sg_t.q_t * sg_t.q_t) < 1e-12);

    CHECK_THROWS_AS((void)solve({-0.3, 0.0}, 1.0, Branch::HighVoltage), NoSolution);
    CHECK_THROWS_AS((void)solve({0.0, 0.0}, 0.0, Branch::HighVoltage), DomainError);
}

TEST_CASE("feasibility and discriminant clamp")
{
    CHECK(feasible({0.0, 0.0}, 1.0));
    CHECK(feasible({-0.25, 0.0}, 1.0));
    CHECK_FALSE(feasible({-0.3, 0.0}, 1.0));

    // Within the rounding clamp the boundary point still solves, with coincident roots.
    const RotatedPower edge{-0.25 - 5e-13, 0.0};
    CHECK(feasible(edge, 1.0));
    CHECK(discriminant(edge, 1.0) == 0.0);
    auto hi = solve(edge, 1.0, Branch::HighVoltage);
    auto lo = solve(edge, 1.0, Branch::LowVoltage);
    CHECK(hi.vg_sq == lo.vg_sq);
    CHECK_FALSE(feasible({-0.25 - 1e-9, 0.0}, 1.0));
}

TEST_CASE("both branches satisfy the loss identity and the quartic")
{
    testing::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double v0 = rng.uniform(0.8, 1.2);
        const auto sg_t = rng.feasible_rotated(v0);
        const auto hi = solve(sg_t, v0, Branch::HighVoltage);
        const auto lo = solve(sg_t, v0, Branch::LowVoltage);
        for (const auto& s : {hi, lo}) {
            REQUIRE(s.vg_sq >= 0.0);
            REQUIRE(s.losses_t >= 0.0);
            REQUIRE(std::abs(s.losses_t + s.vg_sq - v0 * v0 - 2.0 * sg_t.p_t) < 1e-10);
            const double quartic = s.vg_sq * s.vg_sq - (v0 * v0 + 2.0 * sg_t.p_t) * s.vg_sq + sg_t.p_t * sg_t.p_t +
                                   sg_t.q_t * sg_t.q_t;
            REQUIRE(std::abs(quartic) < 1e-9);
        }
        REQUIRE(hi.vg_sq >= lo.vg_sq);
    }
}

TEST_CASE("high-voltage root agrees with a fixed-point power flow")
{
    testing::Rng rng(19);
    int checked = 0;
    while (checked < 300) {
        const double v0 = rng.uniform(0.9, 1.1);
        const auto z = rng.impedance(0.05, 1.0);
        const RotatedPower sg_t{rng.uniform(-0.15, 0.6), rng.uniform(-0.5, 0.5)};
        if (discriminant(sg_t, v0) < 0.1) {
            continue;
        }
        const auto vg = fixed_point_vg(unrotate(sg_t, z), z, v0);
        REQUIRE(std::isfinite(vg.real()));
        const auto sol = solve(sg_t, v0, Branch::HighVoltage);
        REQUIRE(std::norm(vg) == Approx(sol.vg_sq).epsilon(1e-8));
        ++checked;
    }
}

TEST_CASE("net power transferred")
{
    const Impedance z{0.3, 0.4};
    CHECK(net_power_transferred({0.0, 0.0}, z, 1.0, 1.0) == Approx(0.0));
    CHECK(net_power_transferred({0.0, 0.0}, {2.0, 0.1}, 1.1025, 1.05) == Approx(0.0));

    const Impedance diag{0.70711, 0.70711};
    const ComplexPower sg{0.79451, -0.26550};
    const double p0 = net_power_transferred(sg, diag, 1.1236, 1.0);
    CHECK(p0 == Approx(0.35289).epsilon(1e-4));
    // Same number from the losses: Pg - R |I|^2 with |I|^2 = losses_t / |Z|^2.
    const auto sol = solve(rotate(sg, diag), 1.0, Branch::HighVoltage);
    CHECK(net_power_transferred(sg, diag, sol.vg_sq, 1.0) ==
          Approx(sg.p - diag.r * sol.losses_t / diag.magnitude_sq()).epsilon(1e-12));
}

TEST_CASE("R/X form of the net transfer matches the direct form")
{
    testing::Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        const double v0 = rng.uniform(0.9, 1.1);
        const auto z = rng.impedance();
        const auto sg_t = rng.feasible_rotated(v0);
        const auto branch = i % 2 == 0 ? Branch::HighVoltage : Branch::LowVoltage;
        const double vg_sq = solve(sg_t, v0, branch).vg_sq;
        const auto sg = unrotate(sg_t, z);
        const double direct = net_power_transferred(sg, z, vg_sq, v0);
        REQUIRE(std::abs(net_power_transferred_lambda_form(sg, z, vg_sq, v0) - direct) < 1e-10);
    }
    CHECK_THROWS_AS((void)net_power_transferred_lambda_form({1.0, 0.0}, {1.0, 0.0}, 1.0, 1.0), DomainError);
}

TEST_CASE("resistive limit of the transfer")
{
    CHECK(upf_limit_power(0.0, 1.0, 1.0, 1.0) == Approx(0.0));
    CHECK(upf_limit_power(0.0, 1.1236, 1.0, 1.0) == Approx(0.1236));
    CHECK(upf_limit_power(2.1236, 1.1236, 1.0, 1.0) == Approx(-2.0));

    // Oracle: the direct form on an almost purely resistive line.
    testing::Rng rng(29);
    for (int i = 0; i < 200; ++i) {
        const double z_mag = rng.uniform(0.1, 2.0);
        const ComplexPower sg{rng.uniform(-1.0, 2.0), rng.uniform(-1.0, 1.0)};
        const double vg_sq = rng.uniform(0.8, 1.3);
        const double v0 = rng.uniform(0.9, 1.1);
        const auto z = testing::impedance_from(1e6, z_mag);
        REQUIRE(std::abs(upf_limit_power(sg.p, vg_sq, v0, z_mag) - net_power_transferred(sg, z, vg_sq, v0)) < 1e-4);
    }
}

TEST_CASE("boundary power")
{
    CHECK(boundary_power({0.0, 1.0}, 1.0, 1.06) == Approx(std::sqrt(1.1236 - 0.25)));
    CHECK(boundary_power({0.0, 1.0}, 1.0, 1.06) == Approx(0.93467).epsilon(1e-5));
    CHECK(boundary_power({1.0, 0.0}, 1.0, 1.06) == Approx(-0.5));
    CHECK(boundary_power({1.0, 0.0}, 1.0, 0.7) == Approx(-0.5));
    const Impedance z{0.3, 0.4};
    CHECK(boundary_power(z, 1.2, 0.6) == Approx(-(1.44 * 0.3) / (2.0 * 0.25)));
    CHECK_THROWS_AS((void)boundary_power(z, 1.0, 0.49), DomainError);

    // At the boundary the discriminant vanishes and the direct form gives the same transfer.
    testing::Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const double v0 = rng.uniform(0.9, 1.1);
        const double vg = rng.uniform(0.6 * v0, 1.2);
        const auto zz = rng.impedance();
        const RotatedPower edge{vg * vg - v0 * v0 / 2.0, -v0 * std::sqrt(vg * vg - v0 * v0 / 4.0)};
        REQUIRE(std::abs(discriminant(edge, v0)) < 1e-12);
        const double direct = net_power_transferred(unrotate(edge, zz), zz, vg * vg, v0);
        REQUIRE(boundary_power(zz, v0, vg) == Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("transfer grows without bound at zero rotated reactive power")
{
    testing::Rng rng(37);
    for (int i = 0; i < 50; ++i) {
        const auto z = rng.impedance();
        const double v0 = rng.uniform(0.9, 1.1);
        double previous = -1e300;
        for (double pt : {1.0, 10.0, 100.0}) {
            const RotatedPower sg_t{pt, 0.0};
            const double p0 = net_power_transferred(unrotate(sg_t, z), z, solve(sg_t, v0, Branch::HighVoltage).vg_sq, v0);
            REQUIRE(p0 > previous);
            previous = p0;
        }
    }
}

TEST_CASE("voltage locus")
{
    testing::Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const auto z = rng.impedance(0.1, 1.0);
        const double v0 = rng.uniform(0.95, 1.05);
        const double vg = rng.uniform(1.0, 1.1);
        const double pg = rng.uniform(0.0, 1.0);
        const auto qg = voltage_locus_q(pg, z, v0, vg);
        if (!qg) {
            continue;
        }
        const auto sg_t = rotate({pg, *qg}, z);
        REQUIRE(feasible(sg_t, v0));
        const auto hi = solve(sg_t, v0, Branch::HighVoltage);
        const auto lo = solve(sg_t, v0, Branch::LowVoltage);
        const double err = std::min(std::abs(hi.vg_sq - vg * vg), std::abs(lo.vg_sq - vg * vg));
        REQUIRE(err < 1e-9);
    }
    // Far outside the circle there is no reactive power that reaches the voltage.
    CHECK_FALSE(voltage_locus_q(100.0, {0.5, 0.5}, 1.0, 1.06).has_value());
}

TEST_CASE("branch names")
{
    CHECK(std::string(to_string(Branch::HighVoltage)) == "high_voltage");
    CHECK(std::string(to_string(Branch::LowVoltage)) == "low_voltage");
}
