#include "lossmpt/limits.hpp"

#include "lossmpt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace lossmpt {

void TwoBusCase::validate() const
{
    if (!(v0 > 0.0)) {
        throw DomainError("v0 must be positive");
    }
    if (!(v_plus > 0.0)) {
        throw DomainError("v_plus must be positive");
    }
    if (!(i_plus > 0.0)) {
        throw DomainError("i_plus must be positive");
    }
    if (p_plus && !std::isfinite(*p_plus)) {
        throw DomainError("p_plus must be finite");
    }
    require_usable(z);
}

const char* to_string(BindingLimit binding) noexcept
{
    return binding == BindingLimit::Thermal ? "thermal" : "marginal";
}

const OperatingPoint& LimitReport::binding_point() const
{
    if (binding == BindingLimit::Thermal) {
        return *thermal;
    }
    return marginal;
}

ThermalRoots thermal_rotated_roots(double v0, double v_plus, double i_plus, double z_mag)
{
    const double drop = z_mag * i_plus;
    const double p_t = 0.5 * (v_plus * v_plus - v0 * v0 + drop * drop);
    const double s_t = v_plus * drop;
    double arg = s_t * s_t - p_t * p_t;
    if (arg < 0.0 && arg >= -kDiscriminantClamp) {
        arg = 0.0;
    }
    if (arg < 0.0) {
        if (drop > v_plus + v0) {
            throw LimitNotOnLocus(LimitNotOnLocus::Reason::CurrentUnreachable,
                                  "current limit exceeds the largest current on the voltage locus (|Z| I+ > V+ + V0)");
        }
        throw LimitNotOnLocus(LimitNotOnLocus::Reason::VoltageNotBinding,
                              "current limit is reached before the voltage limit (|Z| I+ < |V+ - V0|)");
    }
    const double q_t = std::sqrt(arg);
    return {{p_t, -q_t}, {p_t, q_t}};
}

Branch branch_matching_voltage(const RotatedPower& sg_t, double v0, double vg_sq)
{
    const auto high = solve(sg_t, v0, Branch::HighVoltage);
    const auto low = solve(sg_t, v0, Branch::LowVoltage);
    if (std::abs(high.vg_sq - vg_sq) <= std::abs(low.vg_sq - vg_sq)) {
        return Branch::HighVoltage;
    }
    return Branch::LowVoltage;
}

OperatingPoint make_operating_point(const RotatedPower& sg_t, const Impedance& z, double v0, Branch branch)
{
    const auto solution = solve(sg_t, v0, branch);
    const double z_sq = z.magnitude_sq();

    OperatingPoint point;
    point.sg_t = sg_t;
    point.branch = branch;
    point.sg = unrotate(sg_t, z);
    point.losses = {solution.losses_t * z.r / z_sq, solution.losses_t * z.x / z_sq};
    point.s0 = point.sg - point.losses;
    point.vg = std::sqrt(solution.vg_sq);
    point.current = std::sqrt(solution.losses_t / z_sq);

    const auto m = metrics(point.sg, point.s0);
    point.efficiency = m.efficiency;
    point.pf_gen = m.pf_gen;
    point.pf_sub = m.pf_sub;
    return point;
}

OperatingPoint thermal_limit(const TwoBusCase& c)
{
    c.validate();
    const auto roots = thermal_rotated_roots(c.v0, c.v_plus, c.i_plus, c.z.magnitude());
    const auto branch = branch_matching_voltage(roots.sinking, c.v0, c.v_plus * c.v_plus);
    return make_operating_point(roots.sinking, c.z, c.v0, branch);
}

OperatingPoint marginal_limit(const TwoBusCase& c)
{
    c.validate();
    const double z_mag = c.z.magnitude();
    // R/|Z| = lambda / sqrt(1 + lambda^2), X/|Z| = 1 / sqrt(1 + lambda^2)
    const double r_frac = c.z.r / z_mag;
    const double x_frac = c.z.x / z_mag;
    const RotatedPower sg_t{c.v_plus * (c.v_plus - c.v0 * r_frac), -c.v0 * c.v_plus * x_frac};
    const auto branch = branch_matching_voltage(sg_t, c.v0, c.v_plus * c.v_plus);
    return make_operating_point(sg_t, c.z, c.v0, branch);
}

LimitReport binding_limit(const TwoBusCase& c)
{
    c.validate();
    LimitReport report;
    report.marginal = marginal_limit(c);
    try {
        report.thermal = thermal_limit(c);
    } catch (const LimitNotOnLocus& e) {
        if (e.reason() != LimitNotOnLocus::Reason::CurrentUnreachable) {
            throw;
        }
    }
    if (report.thermal && report.thermal->sg.p <= report.marginal.sg.p) {
        report.binding = BindingLimit::Thermal;
    } else {
        report.binding = BindingLimit::Marginal;
    }
    if (4.0 * c.v_plus * c.v_plus > c.v0 * c.v0) {
        report.lambda_prime = lambda_prime(c.v0, c.v_plus);
    } else {
        report.lambda_prime = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

double lambda_prime(double v0, double v_plus)
{
    const double denom_sq = 4.0 * v_plus * v_plus - v0 * v0;
    if (!(v0 > 0.0) || !(denom_sq > 0.0)) {
        throw DomainError("lambda' needs v0 > 0 and 4 v_plus^2 > v0^2");
    }
    return v0 / std::sqrt(denom_sq);
}

Branch branch_of_marginal_point(const TwoBusCase& c)
{
    c.validate();
    return c.lambda() < lambda_prime(c.v0, c.v_plus) ? Branch::LowVoltage : Branch::HighVoltage;
}

Metrics metrics(const ComplexPower& sg, const ComplexPower& s0)
{
    Metrics m;
    m.efficiency = sg.p > 0.0 ? std::max(0.0, s0.p) / sg.p : 0.0;
    m.pf_gen = sg.power_factor();
    m.pf_sub = s0.power_factor();
    return m;
}

Metrics metrics(const OperatingPoint& point)
{
    return metrics(point.sg, point.s0);
}

ComplexPower aggregate(const ComplexPower& gen, const SubstationModel& sub)
{
    return gen - sub.s_load;
}

ComplexPower generator_output(const ComplexPower& sg, const SubstationModel& sub)
{
    return sg + sub.s_load;
}

ComplexPower substation_power(const ComplexPower& s0, const SubstationModel& sub)
{
    return {s0.p, s0.q - sub.q_comp};
}

std::optional<double> upf_generation(const TwoBusCase& c)
{
    c.validate();
    const double z_sq = c.z.magnitude_sq();
    const double vp_sq = c.v_plus * c.v_plus;
    // |Z|^2 Pg^2 - 2 V+^2 R Pg + V+^4 - V0^2 V+^2 = 0
    const double b = vp_sq * c.z.r;
    const double d = b * b - z_sq * (vp_sq * vp_sq - c.v0 * c.v0 * vp_sq);
    if (d < 0.0) {
        return std::nullopt;
    }
    const double lo = (b - std::sqrt(d)) / z_sq;
    const double hi = (b + std::sqrt(d)) / z_sq;
    const double pg = lo >= 0.0 ? lo : hi;
    if (pg < 0.0) {
        return std::nullopt;
    }
    const auto sg_t = rotate({pg, 0.0}, c.z);
    if (!feasible(sg_t, c.v0)) {
        return std::nullopt;
    }
    if (branch_matching_voltage(sg_t, c.v0, vp_sq) != Branch::HighVoltage) {
        return std::nullopt;
    }
    return pg;
}

double boundary_generation(const TwoBusCase& c)
{
    c.validate();
    const double v0_sq = c.v0 * c.v0;
    const double arg = c.v_plus * c.v_plus - v0_sq / 4.0;
    if (arg < 0.0) {
        throw DomainError("boundary generation needs v_plus >= v0 / 2");
    }
    const RotatedPower sg_t{c.v_plus * c.v_plus - v0_sq / 2.0, -c.v0 * std::sqrt(arg)};
    return unrotate(sg_t, c.z).p;
}

}  // namespace lossmpt
