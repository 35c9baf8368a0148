#pragma once

// Brute-force validation of the closed-form limits on a feeder: solve the power
// flow over a grid of generator (P, Q) injections at one bus, drop infeasible
// points, keep the reactive power that maximises substation export for each P,
// and read the limits off the resulting frontier.

#include "lossmpt/feeder.hpp"
#include "lossmpt/limits.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace lossmpt {

struct GridRange {
    double min{0.0};
    double max{0.0};
    double step{0.01};

    /// Number of grid values; throws DomainError for invalid ranges.
    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] double at(std::size_t i) const noexcept { return min + static_cast<double>(i) * step; }
};

struct SweepConfig {
    GridRange p{0.0, 4.0, 0.01};
    GridRange q{-4.0, 4.0, 0.01};
    double v_plus{1.06};
    // Replaces every branch ampacity when set.
    std::optional<double> ampacity{};
    std::optional<double> p_plus{};
    double q_comp{0.0};
    // 0 selects std::thread::hardware_concurrency().
    unsigned threads{0};
    SolverOptions solver{};
};

struct FrontierPoint {
    double p_gen{0.0};
    double q_gen{0.0};
    double p0_sub{0.0};
    double max_branch_current{0.0};
    double vg{0.0};  // generator bus voltage magnitude
    // A neighbouring q on the grid was rejected for over-voltage, so the
    // chosen q is pinned by the voltage limit.
    bool voltage_binding{false};
};

/// Predicted minus measured, per-unit. NaN when a side is unavailable.
struct LimitErrors {
    double marginal_gen{0.0};  // e(Pgen')
    double thermal_gen{0.0};   // e(P^gen)
    double marginal_sub{0.0};  // e(P0sub')
    double thermal_sub{0.0};   // e(P^0sub)
};

struct SweepReport {
    BusId bus;
    std::vector<FrontierPoint> frontier;

    double measured_marginal{0.0};     // Pgen at the largest P0sub on the frontier
    double measured_marginal_p0{0.0};  // that largest P0sub
    double measured_thermal{0.0};      // largest Pgen with every branch within ampacity
    double measured_thermal_p0{0.0};

    TwoBusEquivalent equivalent{};
    LimitReport predicted{};
    // Predictions mapped to generator output (Pgen = Pg + Pload) and substation export.
    double predicted_marginal_gen{0.0};
    double predicted_marginal_sub{0.0};
    std::optional<double> predicted_thermal_gen{};
    std::optional<double> predicted_thermal_sub{};
    LimitErrors errors{};

    std::size_t points_evaluated{0};
    std::size_t points_feasible{0};
    double v_plus{0.0};
};

/// Throws NoFeasiblePoint when every grid point is rejected.
[[nodiscard]] SweepReport run_sweep(const FeederModel& model, const BusId& bus, const SweepConfig& config);

/// One row of the plot data behind the frontier figures.
struct CurveRecord {
    double p_gen{0.0};
    double p0_sub{0.0};
    // Two-bus closed form evaluated at the measured (Pgen, Qgen).
    double p0_sub_estimated{0.0};
    // Two-bus closed form on the |Vg| = V+ locus at this Pgen.
    double p0_sub_locus{0.0};
    double max_current{0.0};
    double current_estimated{0.0};
    double current_locus{0.0};
    double q_gen{0.0};
    double q_gen_locus{0.0};
    double vg{0.0};
    bool voltage_binding{false};
};

[[nodiscard]] std::vector<CurveRecord> frontier_curves(const SweepReport& report);

}  // namespace lossmpt
