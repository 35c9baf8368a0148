#pragma once

// Balanced single-phase-equivalent radial feeder: topology, a backward/forward
// sweep power flow, and Thevenin reduction to the two-bus case.

#include "lossmpt/limits.hpp"
#include "lossmpt/twobus.hpp"

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lossmpt {

using BusId = std::string;

struct FeederBranch {
    BusId from;
    BusId to;
    Impedance z{};
    double ampacity{0.0};  // per-unit current limit
};

/// Optional system base; only used to annotate results in SI units.
struct GridBase {
    double s_base_va{0.0};
    double v_base_v{0.0};

    [[nodiscard]] double z_base_ohm() const noexcept { return v_base_v * v_base_v / s_base_va; }
    [[nodiscard]] double i_base_a() const noexcept { return s_base_va / v_base_v; }
};

/// Immutable radial feeder. Constructed through FeederModel::build, which
/// validates that the branches form a tree rooted at the source.
class FeederModel {
public:
    static FeederModel build(std::vector<BusId> buses, BusId source, double v0, std::vector<FeederBranch> branches,
                             std::map<BusId, ComplexPower> loads = {}, std::optional<GridBase> base = std::nullopt);

    [[nodiscard]] const std::vector<BusId>& buses() const noexcept { return buses_; }
    [[nodiscard]] const std::vector<FeederBranch>& branches() const noexcept { return branches_; }
    [[nodiscard]] const std::map<BusId, ComplexPower>& loads() const noexcept { return loads_; }
    [[nodiscard]] const BusId& source() const noexcept { return buses_[source_]; }
    [[nodiscard]] std::size_t source_index() const noexcept { return source_; }
    [[nodiscard]] double v0() const noexcept { return v0_; }
    [[nodiscard]] const std::optional<GridBase>& base() const noexcept { return base_; }
    [[nodiscard]] std::size_t bus_count() const noexcept { return buses_.size(); }

    /// Throws InvalidBus for unknown ids.
    [[nodiscard]] std::size_t index_of(const BusId& bus) const;
    [[nodiscard]] bool contains(const BusId& bus) const noexcept { return index_.contains(bus); }

    /// Buses ordered so every bus appears after its parent; source first.
    [[nodiscard]] const std::vector<std::size_t>& sweep_order() const noexcept { return order_; }
    /// Parent bus of a non-source bus.
    [[nodiscard]] std::size_t parent(std::size_t bus) const noexcept { return parent_[bus]; }
    /// Branch connecting a non-source bus to its parent.
    [[nodiscard]] std::size_t parent_branch(std::size_t bus) const noexcept { return parent_branch_[bus]; }
    /// Branch indices on the path source -> bus, source end first.
    [[nodiscard]] std::vector<std::size_t> path_to(const BusId& bus) const;

    /// Sum of all loads.
    [[nodiscard]] ComplexPower total_load() const noexcept;
    /// Loads by bus index.
    [[nodiscard]] std::vector<ComplexPower> load_vector() const;

private:
    FeederModel() = default;

    std::vector<BusId> buses_;
    std::map<BusId, std::size_t> index_;
    std::vector<FeederBranch> branches_;
    std::map<BusId, ComplexPower> loads_;
    std::optional<GridBase> base_;
    std::size_t source_{0};
    double v0_{1.0};

    std::vector<std::size_t> order_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> parent_branch_;
};

struct SolverOptions {
    double tolerance{1e-10};  // max complex voltage change between sweeps
    int max_iterations{100};
};

struct PowerFlowResult {
    std::vector<std::complex<double>> voltages;  // by bus index
    std::vector<double> branch_currents;         // by branch index
    ComplexPower total_losses{};
    // Power delivered to the upstream grid at the source bus (positive on export).
    ComplexPower s0_sub{};
    bool converged{false};
    int iterations{0};
    double last_change{0.0};
    // Largest nodal power mismatch over non-source buses.
    double max_mismatch{0.0};

    [[nodiscard]] std::complex<double> voltage(const FeederModel& model, const BusId& bus) const;
    [[nodiscard]] double max_voltage() const noexcept;
    [[nodiscard]] double max_current() const noexcept;
};

/// Runs the sweep and reports convergence in the result; never throws on divergence.
/// `injections` holds generation by bus index; loads are taken from the model.
[[nodiscard]] PowerFlowResult run_power_flow(const FeederModel& model, std::span<const ComplexPower> injections,
                                             const SolverOptions& options = {});

/// Same as run_power_flow but throws Diverged when the sweep does not converge.
[[nodiscard]] PowerFlowResult solve_feeder(const FeederModel& model, const std::map<BusId, ComplexPower>& injections,
                                           const SolverOptions& options = {});

/// Driving-point impedance between the source and `bus`, from a unit current
/// injection into the nodal admittance system with the source voltage held fixed.
[[nodiscard]] Impedance thevenin_impedance(const FeederModel& model, const BusId& bus);

struct TwoBusEquivalent {
    TwoBusCase two_bus{};
    SubstationModel substation{};
};

/// Reduces the feeder to the two-bus case seen from `bus`. When `i_plus` is not
/// given, the smallest ampacity on the source -> bus path is used.
[[nodiscard]] TwoBusEquivalent two_bus_equivalent(const FeederModel& model, const BusId& bus, double v_plus,
                                                  std::optional<double> i_plus = std::nullopt,
                                                  std::optional<double> p_plus = std::nullopt, double q_comp = 0.0);

}  // namespace lossmpt
