#pragma once

// Maximum power transfer of a generator connected to a strong source through a
// single impedance, under an upper voltage limit V+ at the generator and a line
// current limit I+.
//
// Two loss-induced limits exist. The thermal limit is the largest generation
// with current at I+ while |Vg| = V+. The marginal limit is the point on the
// |Vg| = V+ locus where an extra unit of generation adds more than a unit of
// losses, so net transfer peaks there. Whichever has less real generation binds.

#include "lossmpt/twobus.hpp"

#include <optional>

namespace lossmpt {

struct TwoBusCase {
    double v0{1.0};
    Impedance z{};
    double v_plus{1.0};
    double i_plus{1.0};
    // Substation real power limit. Only enforced by feeder sweeps.
    std::optional<double> p_plus{};

    /// Throws DomainError / DegenerateImpedance on invalid parameters.
    void validate() const;
    [[nodiscard]] double lambda() const noexcept { return z.lambda(); }
};

struct Metrics {
    double efficiency{0.0};
    double pf_gen{1.0};
    double pf_sub{1.0};
};

struct OperatingPoint {
    ComplexPower sg{};      // generator-bus injection
    ComplexPower s0{};      // power delivered to the source bus
    double vg{0.0};         // |Vg|
    double current{0.0};    // line current magnitude
    ComplexPower losses{};  // series losses, Z |I|^2
    double efficiency{0.0};
    double pf_gen{1.0};
    double pf_sub{1.0};
    RotatedPower sg_t{};
    Branch branch{Branch::HighVoltage};
};

enum class BindingLimit { Thermal, Marginal };

[[nodiscard]] const char* to_string(BindingLimit binding) noexcept;

struct LimitReport {
    // Empty when the current limit can never be reached on the voltage locus.
    std::optional<OperatingPoint> thermal{};
    OperatingPoint marginal{};
    BindingLimit binding{BindingLimit::Marginal};
    // NaN when 4 V+^2 <= V0^2.
    double lambda_prime{0.0};

    [[nodiscard]] const OperatingPoint& binding_point() const;
};

/// Total feeder load lumped at the generator bus plus fixed substation compensation.
struct SubstationModel {
    ComplexPower s_load{};
    double q_comp{0.0};
};

/// Both rotated-coordinate roots of the thermal limit on the |Vg| = V+ locus.
struct ThermalRoots {
    RotatedPower sinking{};   // Q~ <= 0; the one the thermal limit uses
    RotatedPower sourcing{};  // Q~ >= 0
};

/// Throws LimitNotOnLocus when (V+ I+ |Z|)^2 < P~^2.
[[nodiscard]] ThermalRoots thermal_rotated_roots(double v0, double v_plus, double i_plus, double z_mag);

/// Builds a fully populated operating point from a rotated injection.
[[nodiscard]] OperatingPoint make_operating_point(const RotatedPower& sg_t, const Impedance& z, double v0,
                                                  Branch branch);

/// The solution branch whose |Vg|^2 is closest to `vg_sq` for this injection.
[[nodiscard]] Branch branch_matching_voltage(const RotatedPower& sg_t, double v0, double vg_sq);

[[nodiscard]] OperatingPoint thermal_limit(const TwoBusCase& c);
[[nodiscard]] OperatingPoint marginal_limit(const TwoBusCase& c);
[[nodiscard]] LimitReport binding_limit(const TwoBusCase& c);

/// R/X ratio below which the marginal-limit point lies on the low-voltage branch.
[[nodiscard]] double lambda_prime(double v0, double v_plus);
[[nodiscard]] Branch branch_of_marginal_point(const TwoBusCase& c);

[[nodiscard]] Metrics metrics(const ComplexPower& sg, const ComplexPower& s0);
[[nodiscard]] Metrics metrics(const OperatingPoint& point);

/// Generator-bus injection seen by the two-bus model: Sgen - Sload.
[[nodiscard]] ComplexPower aggregate(const ComplexPower& gen, const SubstationModel& sub);
/// Inverse of aggregate.
[[nodiscard]] ComplexPower generator_output(const ComplexPower& sg, const SubstationModel& sub);
/// Power through the substation transformer after compensation: S0 - jQcomp.
[[nodiscard]] ComplexPower substation_power(const ComplexPower& s0, const SubstationModel& sub);

/// Real generation under unity power factor at the point |Vg| first reaches V+.
/// Empty when the voltage limit is never reached with Qg = 0.
[[nodiscard]] std::optional<double> upf_generation(const TwoBusCase& c);

/// Real generation at the solution boundary with |Vg| = V+ (reactive power used
/// only to hold the voltage).
[[nodiscard]] double boundary_generation(const TwoBusCase& c);

}  // namespace lossmpt
