#pragma once

// Closed-form power flow of a source bus feeding a generator bus through a
// single series impedance. Everything is per-unit and the source voltage is
// taken as the (real) angle reference.
//
// The "rotated" coordinates multiply a power by conj(Z); in those coordinates
// the line behaves like a unit impedance and the squared generator voltage has
// a closed form.

#include <complex>
#include <optional>

namespace lossmpt {

/// Series line impedance R + jX, per-unit.
struct Impedance {
    double r{0.0};
    double x{0.0};

    [[nodiscard]] double magnitude() const noexcept;
    [[nodiscard]] double magnitude_sq() const noexcept { return r * r + x * x; }
    /// R/X ratio; +infinity for a purely resistive line.
    [[nodiscard]] double lambda() const noexcept;
    [[nodiscard]] std::complex<double> as_complex() const noexcept { return {r, x}; }

    friend bool operator==(const Impedance&, const Impedance&) = default;
};

/// Complex power P + jQ, per-unit.
struct ComplexPower {
    double p{0.0};
    double q{0.0};

    [[nodiscard]] double magnitude() const noexcept;
    /// |P| / |S|, or 1 when |S| is zero.
    [[nodiscard]] double power_factor() const noexcept;
    [[nodiscard]] std::complex<double> as_complex() const noexcept { return {p, q}; }

    friend ComplexPower operator+(ComplexPower a, ComplexPower b) noexcept { return {a.p + b.p, a.q + b.q}; }
    friend ComplexPower operator-(ComplexPower a, ComplexPower b) noexcept { return {a.p - b.p, a.q - b.q}; }
    friend bool operator==(const ComplexPower&, const ComplexPower&) = default;
};

/// Power expressed in rotated coordinates, S * conj(Z). Units are V^2 per-unit.
struct RotatedPower {
    double p_t{0.0};
    double q_t{0.0};

    [[nodiscard]] double magnitude() const noexcept;
    friend bool operator==(const RotatedPower&, const RotatedPower&) = default;
};

/// Which root of the two-bus quadratic to take.
enum class Branch { HighVoltage, LowVoltage };

[[nodiscard]] const char* to_string(Branch branch) noexcept;

struct TwoBusSolution {
    double vg_sq{0.0};     // |Vg|^2
    double losses_t{0.0};  // rotated losses, |Z|^2 |I|^2
    Branch branch{Branch::HighVoltage};
};

/// Discriminants in [-kDiscriminantClamp, 0) are treated as exactly zero.
inline constexpr double kDiscriminantClamp = 1e-12;

/// Throws DegenerateImpedance unless r, x >= 0 and |Z| > 0.
void require_usable(const Impedance& z);

[[nodiscard]] RotatedPower rotate(const ComplexPower& s, const Impedance& z);
[[nodiscard]] ComplexPower unrotate(const RotatedPower& s_t, const Impedance& z);

/// V0^4/4 + V0^2 P~g - Q~g^2, with the rounding clamp applied.
[[nodiscard]] double discriminant(const RotatedPower& sg_t, double v0);
[[nodiscard]] bool feasible(const RotatedPower& sg_t, double v0);

/// Both solution branches share the identity losses_t + vg_sq - V0^2 - 2 P~g = 0.
/// Throws NoSolution when the discriminant is negative.
[[nodiscard]] TwoBusSolution solve(const RotatedPower& sg_t, double v0, Branch branch);

/// Net real power delivered to the source bus: Pg - R (V0^2 + 2 P~g - |Vg|^2) / |Z|^2.
[[nodiscard]] double net_power_transferred(const ComplexPower& sg, const Impedance& z, double vg_sq, double v0);

/// The same quantity written in terms of the R/X ratio. Requires r > 0 and x > 0.
[[nodiscard]] double net_power_transferred_lambda_form(const ComplexPower& sg, const Impedance& z, double vg_sq,
                                                       double v0);

/// Resistive-line limit of the lambda form: -Pg + (|Vg|^2 - V0^2) / |Z|.
[[nodiscard]] double upf_limit_power(double pg, double vg_sq, double v0, double z_mag);

/// Net transfer at the solution boundary (zero discriminant) for a given |Vg|.
[[nodiscard]] double boundary_power(const Impedance& z, double v0, double vg);

/// Reactive generation that puts |Vg| exactly at `vg` for real generation `pg`.
/// The locus is a circle in the (P, Q) plane; this returns its lower root (the
/// one reached first when sinking reactive power). Empty when `pg` is outside it.
[[nodiscard]] std::optional<double> voltage_locus_q(double pg, const Impedance& z, double v0, double vg);

}  // namespace lossmpt
