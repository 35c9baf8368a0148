#include "lossmpt/feeder.hpp"

#include "lossmpt/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

namespace lossmpt {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Sweeps are abandoned once a voltage collapses or blows up.
constexpr double kCollapseVoltage = 1e-3;
constexpr double kRunawayVoltage = 1e3;

// Newton steps allowed after the sweep runs out of iterations.
constexpr int kNewtonIterations = 20;

using Complex = std::complex<double>;

bool voltages_sane(const std::vector<Complex>& v)
{
    return std::all_of(v.begin(), v.end(), [](Complex value) {
        const double mag = std::abs(value);
        return std::isfinite(mag) && mag >= kCollapseVoltage && mag <= kRunawayVoltage;
    });
}

// Near the nose of the PV curve the sweep contracts too slowly to reach the
// tolerance. Newton-Raphson on the nodal power balance, in rectangular
// coordinates and started from the sweep state, finishes the job in a few steps.
bool newton_polish(const FeederModel& model, const std::vector<Complex>& net, std::vector<Complex>& v,
                   double tolerance, int& iterations, double& last_change)
{
    const std::size_t n = model.bus_count();
    const auto source = model.source_index();
    std::vector<Eigen::Index> unknown(n, -1);
    Eigen::Index count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k != source) {
            unknown[k] = count++;
        }
    }

    // Off-diagonal admittances as (k, m, Y_km); the diagonal is accumulated separately.
    struct Link {
        std::size_t a;
        std::size_t b;
        Complex y;
    };
    std::vector<Link> links;
    std::vector<Complex> diag(n);
    for (const auto& br : model.branches()) {
        const Complex y = 1.0 / br.z.as_complex();
        const auto a = model.index_of(br.from);
        const auto b = model.index_of(br.to);
        links.push_back({a, b, -y});
        diag[a] += y;
        diag[b] += y;
    }

    const Complex j{0.0, 1.0};
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    for (int it = 0; it < kNewtonIterations; ++it) {
        std::vector<Complex> current(n);
        for (std::size_t k = 0; k < n; ++k) {
            current[k] = diag[k] * v[k];
        }
        for (const auto& l : links) {
            current[l.a] += l.y * v[l.b];
            current[l.b] += l.y * v[l.a];
        }

        Eigen::VectorXd rhs(2 * count);
        std::vector<Eigen::Triplet<double>> entries;
        auto add = [&](std::size_t k, std::size_t m, Complex d_e, Complex d_f) {
            const auto row = 2 * unknown[k];
            const auto col = 2 * unknown[m];
            entries.emplace_back(row, col, d_e.real());
            entries.emplace_back(row + 1, col, d_e.imag());
            entries.emplace_back(row, col + 1, d_f.real());
            entries.emplace_back(row + 1, col + 1, d_f.imag());
        };
        for (std::size_t k = 0; k < n; ++k) {
            if (k == source) {
                continue;
            }
            const Complex f = v[k] * std::conj(current[k]) - net[k];
            rhs(2 * unknown[k]) = -f.real();
            rhs(2 * unknown[k] + 1) = -f.imag();
            const Complex yk = std::conj(diag[k]);
            add(k, k, std::conj(current[k]) + v[k] * yk, j * std::conj(current[k]) - j * v[k] * yk);
        }
        for (const auto& l : links) {
            const Complex y = std::conj(l.y);
            if (l.a != source && l.b != source) {
                add(l.a, l.b, v[l.a] * y, -j * v[l.a] * y);
                add(l.b, l.a, v[l.b] * y, -j * v[l.b] * y);
            }
        }
        Eigen::SparseMatrix<double> jacobian(2 * count, 2 * count);
        jacobian.setFromTriplets(entries.begin(), entries.end());
        lu.compute(jacobian);
        if (lu.info() != Eigen::Success) {
            return false;
        }
        const Eigen::VectorXd step = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !step.allFinite()) {
            return false;
        }

        double change = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == source) {
                continue;
            }
            const Complex dv{step(2 * unknown[k]), step(2 * unknown[k] + 1)};
            v[k] += dv;
            change = std::max(change, std::abs(dv));
        }
        ++iterations;
        last_change = change;
        if (!voltages_sane(v)) {
            return false;
        }
        if (change < tolerance) {
            return true;
        }
    }
    return false;
}

}  // namespace

FeederModel FeederModel::build(std::vector<BusId> buses, BusId source, double v0, std::vector<FeederBranch> branches,
                               std::map<BusId, ComplexPower> loads, std::optional<GridBase> base)
{
    FeederModel model;
    if (buses.empty()) {
        throw TopologyError("feeder has no buses");
    }
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (!model.index_.emplace(buses[i], i).second) {
            throw TopologyError("duplicate bus id '" + buses[i] + "'");
        }
    }
    const auto source_it = model.index_.find(source);
    if (source_it == model.index_.end()) {
        throw TopologyError("source bus '" + source + "' is not declared");
    }
    if (!(v0 > 0.0)) {
        throw DomainError("source voltage must be positive");
    }
    if (base && (!(base->s_base_va > 0.0) || !(base->v_base_v > 0.0))) {
        throw DomainError("base quantities must be positive");
    }

    const std::size_t n = buses.size();
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);  // (neighbour, branch)
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const auto& br = branches[b];
        const auto from = model.index_.find(br.from);
        const auto to = model.index_.find(br.to);
        if (from == model.index_.end() || to == model.index_.end()) {
            throw TopologyError("branch " + br.from + " -> " + br.to + " references an undeclared bus");
        }
        if (from->second == to->second) {
            throw TopologyError("branch " + br.from + " -> " + br.to + " is a self loop");
        }
        require_usable(br.z);
        if (!(br.ampacity > 0.0)) {
            throw DomainError("branch " + br.from + " -> " + br.to + " needs a positive ampacity");
        }
        adjacency[from->second].emplace_back(to->second, b);
        adjacency[to->second].emplace_back(from->second, b);
    }
    if (branches.size() != n - 1) {
        throw TopologyError("a radial feeder with " + std::to_string(n) + " buses needs " + std::to_string(n - 1) +
                            " branches, found " + std::to_string(branches.size()));
    }

    model.source_ = source_it->second;
    model.parent_.assign(n, kNone);
    model.parent_branch_.assign(n, kNone);
    std::vector<bool> seen(n, false);
    std::queue<std::size_t> frontier;
    frontier.push(model.source_);
    seen[model.source_] = true;
    while (!frontier.empty()) {
        const auto bus = frontier.front();
        frontier.pop();
        model.order_.push_back(bus);
        for (const auto& [next, branch] : adjacency[bus]) {
            if (branch == model.parent_branch_[bus]) {
                continue;
            }
            if (seen[next]) {
                throw TopologyError("feeder contains a loop through bus '" + buses[next] + "'");
            }
            seen[next] = true;
            model.parent_[next] = bus;
            model.parent_branch_[next] = branch;
            frontier.push(next);
        }
    }
    if (model.order_.size() != n) {
        const auto it = std::find(seen.begin(), seen.end(), false);
        throw TopologyError("bus '" + buses[static_cast<std::size_t>(it - seen.begin())] +
                            "' is not connected to the source");
    }

    for (const auto& [bus, load] : loads) {
        if (!model.index_.contains(bus)) {
            throw TopologyError("load at undeclared bus '" + bus + "'");
        }
        (void)load;
    }

    model.buses_ = std::move(buses);
    model.branches_ = std::move(branches);
    model.loads_ = std::move(loads);
    model.base_ = base;
    model.v0_ = v0;
    return model;
}

std::size_t FeederModel::index_of(const BusId& bus) const
{
    const auto it = index_.find(bus);
    if (it == index_.end()) {
        throw InvalidBus("unknown bus '" + bus + "'");
    }
    return it->second;
}

std::vector<std::size_t> FeederModel::path_to(const BusId& bus) const
{
    std::vector<std::size_t> path;
    for (auto k = index_of(bus); k != source_; k = parent_[k]) {
        path.push_back(parent_branch_[k]);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

ComplexPower FeederModel::total_load() const noexcept
{
    ComplexPower total;
    for (const auto& [bus, load] : loads_) {
        total = total + load;
    }
    return total;
}

std::vector<ComplexPower> FeederModel::load_vector() const
{
    std::vector<ComplexPower> out(buses_.size());
    for (const auto& [bus, load] : loads_) {
        out[index_.at(bus)] = load;
    }
    return out;
}

std::complex<double> PowerFlowResult::voltage(const FeederModel& model, const BusId& bus) const
{
    return voltages.at(model.index_of(bus));
}

double PowerFlowResult::max_voltage() const noexcept
{
    double v = 0.0;
    for (const auto& value : voltages) {
        v = std::max(v, std::abs(value));
    }
    return v;
}

double PowerFlowResult::max_current() const noexcept
{
    double i = 0.0;
    for (double value : branch_currents) {
        i = std::max(i, value);
    }
    return i;
}

PowerFlowResult run_power_flow(const FeederModel& model, std::span<const ComplexPower> injections,
                               const SolverOptions& options)
{
    const std::size_t n = model.bus_count();
    if (injections.size() != n) {
        throw DomainError("injection vector size does not match the bus count");
    }
    const auto& order = model.sweep_order();
    const auto& branches = model.branches();
    const auto source = model.source_index();

    // Net injection, generation minus load.
    std::vector<std::complex<double>> net(n);
    const auto loads = model.load_vector();
    for (std::size_t k = 0; k < n; ++k) {
        net[k] = (injections[k] - loads[k]).as_complex();
    }
    std::vector<std::complex<double>> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (k != source) {
            z[k] = branches[model.parent_branch(k)].z.as_complex();
        }
    }

    PowerFlowResult result;
    auto& v = result.voltages;
    v.assign(n, std::complex<double>(model.v0(), 0.0));
    // Current flowing from each bus towards its parent.
    std::vector<std::complex<double>> up(n);

    for (int it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t k = 0; k < n; ++k) {
            up[k] = std::conj(net[k] / v[k]);
        }
        for (auto pos = order.size(); pos-- > 1;) {
            const auto k = order[pos];
            up[model.parent(k)] += up[k];
        }
        double change = 0.0;
        for (std::size_t pos = 1; pos < order.size(); ++pos) {
            const auto k = order[pos];
            const auto updated = v[model.parent(k)] + z[k] * up[k];
            change = std::max(change, std::abs(updated - v[k]));
            v[k] = updated;
        }
        result.iterations = it;
        result.last_change = change;
        if (!std::isfinite(change) || !voltages_sane(v)) {
            break;
        }
        if (change < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    if (!result.converged && result.iterations == options.max_iterations && voltages_sane(v)) {
        result.converged = newton_polish(model, net, v, options.tolerance, result.iterations, result.last_change);
    }

    // Branch currents from the final voltages, so losses and mismatch are
    // consistent with the reported state.
    std::vector<std::complex<double>> branch_up(n);
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const auto k = order[pos];
        branch_up[k] = (v[k] - v[model.parent(k)]) / z[k];
    }
    std::vector<std::complex<double>> nodal(n);
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const auto k = order[pos];
        nodal[k] += branch_up[k];
        nodal[model.parent(k)] -= branch_up[k];
    }

    result.branch_currents.assign(branches.size(), 0.0);
    std::complex<double> losses{};
    double mismatch = 0.0;
    for (std::size_t pos = 1; pos < order.size(); ++pos) {
        const auto k = order[pos];
        result.branch_currents[model.parent_branch(k)] = std::abs(branch_up[k]);
        losses += z[k] * std::norm(branch_up[k]);
        mismatch = std::max(mismatch, std::abs(v[k] * std::conj(nodal[k]) - net[k]));
    }
    result.max_mismatch = mismatch;
    result.total_losses = {losses.real(), losses.imag()};
    // Power arriving at the source through its branches plus its own net injection.
    const auto delivered = v[source] * std::conj(-nodal[source]) + net[source];
    result.s0_sub = {delivered.real(), delivered.imag()};
    return result;
}

PowerFlowResult solve_feeder(const FeederModel& model, const std::map<BusId, ComplexPower>& injections,
                             const SolverOptions& options)
{
    std::vector<ComplexPower> dense(model.bus_count());
    for (const auto& [bus, s] : injections) {
        dense[model.index_of(bus)] = s;
    }
    auto result = run_power_flow(model, dense, options);
    if (!result.converged) {
        throw Diverged("power flow did not converge after " + std::to_string(result.iterations) +
                           " iterations (last voltage change " + std::to_string(result.last_change) + " pu)",
                       result.last_change, result.iterations);
    }
    return result;
}

Impedance thevenin_impedance(const FeederModel& model, const BusId& bus)
{
    const auto target = model.index_of(bus);
    const auto source = model.source_index();
    if (target == source) {
        throw InvalidBus("Thevenin impedance of the source bus against itself is undefined");
    }

    // Unknowns are every bus voltage except the source, which is held at zero
    // perturbation.
    const std::size_t n = model.bus_count();
    std::vector<Eigen::Index> unknown(n, -1);
    Eigen::Index count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k != source) {
            unknown[k] = count++;
        }
    }

    std::vector<Eigen::Triplet<Complex>> entries;
    for (const auto& br : model.branches()) {
        const Complex y = 1.0 / br.z.as_complex();
        const auto a = unknown[model.index_of(br.from)];
        const auto b = unknown[model.index_of(br.to)];
        if (a >= 0) {
            entries.emplace_back(a, a, y);
        }
        if (b >= 0) {
            entries.emplace_back(b, b, y);
        }
        if (a >= 0 && b >= 0) {
            entries.emplace_back(a, b, -y);
            entries.emplace_back(b, a, -y);
        }
    }
    Eigen::SparseMatrix<Complex> admittance(count, count);
    admittance.setFromTriplets(entries.begin(), entries.end());
    admittance.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(admittance);
    if (lu.info() != Eigen::Success) {
        throw IllConditioned("nodal admittance matrix is singular: " + lu.lastErrorMessage());
    }
    Eigen::VectorXcd injection = Eigen::VectorXcd::Zero(count);
    injection(unknown[target]) = Complex(1.0, 0.0);
    const Eigen::VectorXcd dv = lu.solve(injection);
    if (lu.info() != Eigen::Success || !dv.allFinite()) {
        throw IllConditioned("nodal admittance solve failed");
    }
    const Complex z = dv(unknown[target]);
    return {z.real(), z.imag()};
}

TwoBusEquivalent two_bus_equivalent(const FeederModel& model, const BusId& bus, double v_plus,
                                    std::optional<double> i_plus, std::optional<double> p_plus, double q_comp)
{
    TwoBusEquivalent eq;
    eq.two_bus.z = thevenin_impedance(model, bus);
    // Round-off from the linear solve can leave a tiny negative component on a
    // purely resistive or reactive path.
    eq.two_bus.z.r = std::max(eq.two_bus.z.r, 0.0);
    eq.two_bus.z.x = std::max(eq.two_bus.z.x, 0.0);
    eq.two_bus.v0 = model.v0();
    eq.two_bus.v_plus = v_plus;
    eq.two_bus.p_plus = p_plus;
    if (i_plus) {
        eq.two_bus.i_plus = *i_plus;
    } else {
        double smallest = std::numeric_limits<double>::infinity();
        for (auto b : model.path_to(bus)) {
            smallest = std::min(smallest, model.branches()[b].ampacity);
        }
        eq.two_bus.i_plus = smallest;
    }
    eq.substation.s_load = model.total_load();
    eq.substation.q_comp = q_comp;
    eq.two_bus.validate();
    return eq;
}

}  // namespace lossmpt
