#include "lossmpt/twobus.hpp"

#include "lossmpt/errors.hpp"

#include <cmath>
#include <limits>

namespace lossmpt {

double Impedance::magnitude() const noexcept
{
    return std::hypot(r, x);
}

double Impedance::lambda() const noexcept
{
    if (x == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return r / x;
}

double ComplexPower::magnitude() const noexcept
{
    return std::hypot(p, q);
}

double ComplexPower::power_factor() const noexcept
{
    const double s = magnitude();
    if (s == 0.0) {
        return 1.0;
    }
    return std::abs(p) / s;
}

double RotatedPower::magnitude() const noexcept
{
    return std::hypot(p_t, q_t);
}

const char* to_string(Branch branch) noexcept
{
    return branch == Branch::HighVoltage ? "high_voltage" : "low_voltage";
}

void require_usable(const Impedance& z)
{
    if (!(z.r >= 0.0) || !(z.x >= 0.0)) {
        throw DegenerateImpedance("impedance components must be non-negative");
    }
    if (z.magnitude_sq() == 0.0) {
        throw DegenerateImpedance("impedance has zero magnitude");
    }
}

namespace {

void require_positive_voltage(double v0)
{
    if (!(v0 > 0.0)) {
        throw DomainError("source voltage must be positive");
    }
}

}  // namespace

RotatedPower rotate(const ComplexPower& s, const Impedance& z)
{
    require_usable(z);
    return {s.p * z.r + s.q * z.x, s.q * z.r - s.p * z.x};
}

ComplexPower unrotate(const RotatedPower& s_t, const Impedance& z)
{
    require_usable(z);
    const double z_sq = z.magnitude_sq();
    return {(s_t.p_t * z.r - s_t.q_t * z.x) / z_sq, (s_t.q_t * z.r + s_t.p_t * z.x) / z_sq};
}

double discriminant(const RotatedPower& sg_t, double v0)
{
    const double v0_sq = v0 * v0;
    const double d = v0_sq * v0_sq / 4.0 + v0_sq * sg_t.p_t - sg_t.q_t * sg_t.q_t;
    if (d < 0.0 && d >= -kDiscriminantClamp) {
        return 0.0;
    }
    return d;
}

bool feasible(const RotatedPower& sg_t, double v0)
{
    require_positive_voltage(v0);
    return discriminant(sg_t, v0) >= 0.0;
}

TwoBusSolution solve(const RotatedPower& sg_t, double v0, Branch branch)
{
    require_positive_voltage(v0);
    const double d = discriminant(sg_t, v0);
    if (d < 0.0) {
        throw NoSolution("two-bus discriminant is negative; no power flow solution exists");
    }
    const double centre = sg_t.p_t + v0 * v0 / 2.0;
    const double root = std::sqrt(d);
    if (branch == Branch::HighVoltage) {
        return {centre + root, centre - root, branch};
    }
    return {centre - root, centre + root, branch};
}

double net_power_transferred(const ComplexPower& sg, const Impedance& z, double vg_sq, double v0)
{
    require_usable(z);
    const double pg_t = sg.p * z.r + sg.q * z.x;
    const double losses_t = v0 * v0 + 2.0 * pg_t - vg_sq;
    return sg.p - z.r / z.magnitude_sq() * losses_t;
}

double net_power_transferred_lambda_form(const ComplexPower& sg, const Impedance& z, double vg_sq, double v0)
{
    require_usable(z);
    if (!(z.r > 0.0) || !(z.x > 0.0)) {
        throw DomainError("lambda form needs a finite, non-zero R/X ratio");
    }
    const double lambda = z.lambda();
    const double inv = 1.0 / lambda;
    return sg.p * (inv - lambda) / (lambda + inv) - sg.q * 2.0 / (lambda + inv) +
           (vg_sq - v0 * v0) / z.magnitude() * lambda / std::sqrt(lambda * lambda + 1.0);
}

double upf_limit_power(double pg, double vg_sq, double v0, double z_mag)
{
    if (!(z_mag > 0.0)) {
        throw DegenerateImpedance("impedance has zero magnitude");
    }
    return -pg + (vg_sq - v0 * v0) / z_mag;
}

double boundary_power(const Impedance& z, double v0, double vg)
{
    require_usable(z);
    require_positive_voltage(v0);
    const double ratio = vg * vg / (v0 * v0);
    if (ratio < 0.25) {
        throw DomainError("boundary power needs |Vg|/V0 >= 1/2");
    }
    const double z_mag = z.magnitude();
    return v0 * v0 / z_mag * (-z.r / (2.0 * z_mag) + z.x / z_mag * std::sqrt(ratio - 0.25));
}

std::optional<double> voltage_locus_q(double pg, const Impedance& z, double v0, double vg)
{
    require_usable(z);
    require_positive_voltage(v0);
    const double z_sq = z.magnitude_sq();
    const double vg_sq = vg * vg;
    // |Z|^2 Q^2 - 2 vg^2 X Q + (|Z|^2 P^2 - 2 vg^2 R P + vg^4 - V0^2 vg^2) = 0
    const double c = z_sq * pg * pg - 2.0 * vg_sq * z.r * pg + vg_sq * vg_sq - v0 * v0 * vg_sq;
    const double d = vg_sq * vg_sq * z.x * z.x - z_sq * c;
    if (d < 0.0) {
        return std::nullopt;
    }
    return (vg_sq * z.x - std::sqrt(d)) / z_sq;
}

}  // namespace lossmpt
