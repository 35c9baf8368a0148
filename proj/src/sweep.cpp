#include "lossmpt/sweep.hpp"

#include "lossmpt/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace lossmpt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Transfers closer than this are ties. The power flow converges to 1e-10 in
// voltage, so smaller differences carry no information.
constexpr double kTieTolerance = 1e-9;

enum class Verdict { Feasible, OverVoltage, OverCurrent, OverTransformer, Diverged };

struct RowContext {
    const FeederModel& model;
    std::size_t bus;
    const SweepConfig& config;
    std::vector<double> ampacity;  // by branch index
};

Verdict classify(const RowContext& ctx, const PowerFlowResult& flow)
{
    if (!flow.converged) {
        return Verdict::Diverged;
    }
    if (flow.max_voltage() > ctx.config.v_plus) {
        return Verdict::OverVoltage;
    }
    for (std::size_t b = 0; b < flow.branch_currents.size(); ++b) {
        if (flow.branch_currents[b] > ctx.ampacity[b]) {
            return Verdict::OverCurrent;
        }
    }
    if (ctx.config.p_plus && flow.s0_sub.p > *ctx.config.p_plus) {
        return Verdict::OverTransformer;
    }
    return Verdict::Feasible;
}

// Evaluates one P row of the grid and returns the q maximising P0sub.
std::optional<FrontierPoint> evaluate_row(const RowContext& ctx, double p, std::size_t& feasible_count)
{
    const auto nq = ctx.config.q.count();
    std::vector<ComplexPower> injections(ctx.model.bus_count());
    std::vector<Verdict> verdicts(nq);
    std::optional<FrontierPoint> best;
    std::size_t best_index = 0;

    for (std::size_t j = 0; j < nq; ++j) {
        const double q = ctx.config.q.at(j);
        injections[ctx.bus] = {p, q};
        const auto flow = run_power_flow(ctx.model, injections, ctx.config.solver);
        verdicts[j] = classify(ctx, flow);
        if (verdicts[j] != Verdict::Feasible) {
            continue;
        }
        ++feasible_count;
        const double p0 = flow.s0_sub.p;
        // Ties go to the smaller |q|.
        const bool better = !best || p0 > best->p0_sub + kTieTolerance;
        const bool tie = best && std::abs(p0 - best->p0_sub) <= kTieTolerance && std::abs(q) < std::abs(best->q_gen);
        if (better || tie) {
            best = FrontierPoint{p, q, p0, flow.max_current(), std::abs(flow.voltages[ctx.bus]), false};
            best_index = j;
        }
    }
    if (best) {
        const bool below = best_index > 0 && verdicts[best_index - 1] == Verdict::OverVoltage;
        const bool above = best_index + 1 < nq && verdicts[best_index + 1] == Verdict::OverVoltage;
        best->voltage_binding = below || above;
    }
    return best;
}

}  // namespace

std::size_t GridRange::count() const
{
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw DomainError("grid step must be positive");
    }
    if (!(max >= min) || !std::isfinite(min) || !std::isfinite(max)) {
        throw DomainError("grid range is empty");
    }
    return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
}

SweepReport run_sweep(const FeederModel& model, const BusId& bus, const SweepConfig& config)
{
    const auto bus_index = model.index_of(bus);
    if (bus_index == model.source_index()) {
        throw InvalidBus("the generator cannot sit on the source bus");
    }
    const auto np = config.p.count();
    (void)config.q.count();

    RowContext ctx{model, bus_index, config, {}};
    for (const auto& br : model.branches()) {
        ctx.ampacity.push_back(config.ampacity.value_or(br.ampacity));
    }

    std::vector<std::optional<FrontierPoint>> rows(np);
    std::vector<std::size_t> feasible(np, 0);
    unsigned workers = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, np));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (auto i = next.fetch_add(1); i < np; i = next.fetch_add(1)) {
            rows[i] = evaluate_row(ctx, config.p.at(i), feasible[i]);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    SweepReport report;
    report.bus = bus;
    report.v_plus = config.v_plus;
    report.points_evaluated = np * config.q.count();
    for (std::size_t i = 0; i < np; ++i) {
        report.points_feasible += feasible[i];
        if (rows[i]) {
            report.frontier.push_back(*rows[i]);
        }
    }
    if (report.frontier.empty()) {
        throw NoFeasiblePoint("no grid point satisfies the voltage, current and transformer constraints");
    }

    const auto peak = std::max_element(report.frontier.begin(), report.frontier.end(),
                                       [](const auto& a, const auto& b) { return a.p0_sub < b.p0_sub; });
    report.measured_marginal = peak->p_gen;
    report.measured_marginal_p0 = peak->p0_sub;
    // Every frontier point already respects the ampacities.
    report.measured_thermal = report.frontier.back().p_gen;
    report.measured_thermal_p0 = report.frontier.back().p0_sub;

    report.equivalent = two_bus_equivalent(model, bus, config.v_plus, config.ampacity, config.p_plus, config.q_comp);
    const auto& two_bus = report.equivalent.two_bus;
    const auto& load = report.equivalent.substation.s_load;
    try {
        report.predicted = binding_limit(two_bus);
    } catch (const LimitNotOnLocus&) {
        report.predicted = LimitReport{};
        report.predicted.marginal = marginal_limit(two_bus);
        report.predicted.binding = BindingLimit::Marginal;
        report.predicted.lambda_prime = 4.0 * two_bus.v_plus * two_bus.v_plus > two_bus.v0 * two_bus.v0
                                            ? lambda_prime(two_bus.v0, two_bus.v_plus)
                                            : kNaN;
    }

    report.predicted_marginal_gen = report.predicted.marginal.sg.p + load.p;
    report.predicted_marginal_sub = report.predicted.marginal.s0.p;
    report.errors.marginal_gen = report.predicted_marginal_gen - report.measured_marginal;
    report.errors.marginal_sub = report.predicted_marginal_sub - report.measured_marginal_p0;
    if (report.predicted.thermal) {
        report.predicted_thermal_gen = report.predicted.thermal->sg.p + load.p;
        report.predicted_thermal_sub = report.predicted.thermal->s0.p;
        report.errors.thermal_gen = *report.predicted_thermal_gen - report.measured_thermal;
        report.errors.thermal_sub = *report.predicted_thermal_sub - report.measured_thermal_p0;
    } else {
        report.errors.thermal_gen = kNaN;
        report.errors.thermal_sub = kNaN;
    }
    return report;
}

std::vector<CurveRecord> frontier_curves(const SweepReport& report)
{
    const auto& two_bus = report.equivalent.two_bus;
    const auto& load = report.equivalent.substation.s_load;
    const auto& z = two_bus.z;
    const double z_sq = z.magnitude_sq();
    const double vp_sq = two_bus.v_plus * two_bus.v_plus;

    std::vector<CurveRecord> records;
    records.reserve(report.frontier.size());
    for (const auto& point : report.frontier) {
        CurveRecord rec;
        rec.p_gen = point.p_gen;
        rec.p0_sub = point.p0_sub;
        rec.max_current = point.max_branch_current;
        rec.q_gen = point.q_gen;
        rec.vg = point.vg;
        rec.voltage_binding = point.voltage_binding;

        const auto sg = aggregate({point.p_gen, point.q_gen}, report.equivalent.substation);
        const auto sg_t = rotate(sg, z);
        if (feasible(sg_t, two_bus.v0)) {
            const auto sol = solve(sg_t, two_bus.v0, Branch::HighVoltage);
            rec.p0_sub_estimated = net_power_transferred(sg, z, sol.vg_sq, two_bus.v0);
            rec.current_estimated = std::sqrt(sol.losses_t / z_sq);
        } else {
            rec.p0_sub_estimated = kNaN;
            rec.current_estimated = kNaN;
        }

        const double pg = point.p_gen - load.p;
        if (const auto qg = voltage_locus_q(pg, z, two_bus.v0, two_bus.v_plus)) {
            const ComplexPower locus{pg, *qg};
            const auto locus_t = rotate(locus, z);
            rec.q_gen_locus = *qg + load.q;
            rec.p0_sub_locus = net_power_transferred(locus, z, vp_sq, two_bus.v0);
            const double losses_t = two_bus.v0 * two_bus.v0 + 2.0 * locus_t.p_t - vp_sq;
            rec.current_locus = std::sqrt(std::max(0.0, losses_t) / z_sq);
        } else {
            rec.q_gen_locus = kNaN;
            rec.p0_sub_locus = kNaN;
            rec.current_locus = kNaN;
        }
        records.push_back(rec);
    }
    return records;
}

}  // namespace lossmpt
