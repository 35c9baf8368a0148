#include "lossmpt/cli.hpp"

#include "lossmpt/errors.hpp"
#include "lossmpt/feeder.hpp"
#include "lossmpt/feeder_io.hpp"
#include "lossmpt/limits.hpp"
#include "lossmpt/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

namespace lossmpt::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kUnlimitedAmpacity = 1e9;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by every subcommand; which ones apply depends on the command.
struct Options {
    std::string feeder;
    std::string bus;
    std::optional<double> v0;
    std::optional<double> r;
    std::optional<double> x;
    double v_plus{1.06};
    std::optional<double> i_plus;
    std::optional<double> p_plus;
    double q_comp{0.0};
    double p_min{0.0};
    double p_max{4.0};
    double p_step{0.01};
    double q_min{-4.0};
    double q_max{4.0};
    double q_step{0.01};
    unsigned threads{0};
    double z_mag{1.0};
    double lambda_min{0.01};
    double lambda_max{100.0};
    int lambda_points{201};
    std::string format;
    std::string out{"-"};
    std::string frontier_out;
};

Json number(double value)
{
    if (!std::isfinite(value)) {
        return nullptr;
    }
    return value;
}

template <class T>
Json number(const std::optional<T>& value)
{
    return value ? number(*value) : Json(nullptr);
}

Json point_json(const OperatingPoint& pt)
{
    Json j;
    j["p_gen"] = number(pt.sg.p);
    j["q_gen"] = number(pt.sg.q);
    j["p0"] = number(pt.s0.p);
    j["q0"] = number(pt.s0.q);
    j["vg"] = number(pt.vg);
    j["current"] = number(pt.current);
    j["loss_p"] = number(pt.losses.p);
    j["loss_q"] = number(pt.losses.q);
    j["efficiency"] = number(pt.efficiency);
    j["pf_gen"] = number(pt.pf_gen);
    j["pf_sub"] = number(pt.pf_sub);
    j["branch"] = to_string(pt.branch);
    return j;
}

Json case_json(const TwoBusCase& c)
{
    Json j;
    j["v0"] = number(c.v0);
    j["r"] = number(c.z.r);
    j["x"] = number(c.z.x);
    j["lambda"] = number(c.lambda());
    j["z_mag"] = number(c.z.magnitude());
    j["v_plus"] = number(c.v_plus);
    j["i_plus"] = number(c.i_plus);
    j["p_plus"] = number(c.p_plus);
    return j;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void header(std::initializer_list<std::string_view> names)
    {
        bool first = true;
        for (auto name : names) {
            os_ << (first ? "" : ",") << name;
            first = false;
        }
        os_ << '\n';
    }

    CsvWriter& cell(double value)
    {
        return text(format_number(value));
    }

    CsvWriter& cell(const std::optional<double>& value)
    {
        return cell(value.value_or(std::numeric_limits<double>::quiet_NaN()));
    }

    CsvWriter& text(std::string_view value)
    {
        os_ << (first_ ? "" : ",") << value;
        first_ = false;
        return *this;
    }

    void end_row()
    {
        os_ << '\n';
        first_ = true;
    }

private:
    std::ostream& os_;
    bool first_{true};
};

void write_output(const Options& opt, std::ostream& out, const std::string& body)
{
    if (opt.out.empty() || opt.out == "-") {
        out << body;
        return;
    }
    std::ofstream file(opt.out, std::ios::binary);
    if (!file) {
        throw std::filesystem::filesystem_error("cannot write output", opt.out,
                                                std::make_error_code(std::errc::permission_denied));
    }
    file << body;
}

void require_format(const std::string& format)
{
    if (format != "csv" && format != "json") {
        throw UsageError("--format must be csv or json");
    }
}

FeederModel load_model(const Options& opt)
{
    if (!opt.feeder.empty()) {
        if (opt.bus.empty()) {
            throw UsageError("--bus is required with --feeder");
        }
        return read_feeder_file(opt.feeder);
    }
    if (!opt.r || !opt.x) {
        throw UsageError("give either --feeder and --bus, or --r and --x");
    }
    const double ampacity = opt.i_plus.value_or(kUnlimitedAmpacity);
    return FeederModel::build({"source", "gen"}, "source", opt.v0.value_or(1.0),
                              {{"source", "gen", {*opt.r, *opt.x}, ampacity}});
}

std::string bus_of(const Options& opt)
{
    return opt.feeder.empty() ? std::string("gen") : opt.bus;
}

int cmd_limits(const Options& opt, std::ostream& out)
{
    const std::string format = opt.format.empty() ? "json" : opt.format;
    require_format(format);

    TwoBusCase two_bus;
    SubstationModel substation;
    std::string bus;
    if (!opt.feeder.empty()) {
        const auto model = load_model(opt);
        const auto eq = two_bus_equivalent(model, opt.bus, opt.v_plus, opt.i_plus, opt.p_plus, opt.q_comp);
        two_bus = eq.two_bus;
        substation = eq.substation;
        bus = opt.bus;
    } else {
        if (!opt.r || !opt.x) {
            throw UsageError("limits needs --feeder and --bus, or --r and --x");
        }
        if (!opt.i_plus) {
            throw UsageError("--i-plus is required for inline parameters");
        }
        two_bus = TwoBusCase{opt.v0.value_or(1.0), {*opt.r, *opt.x}, opt.v_plus, *opt.i_plus, opt.p_plus};
        substation.q_comp = opt.q_comp;
    }
    const auto report = binding_limit(two_bus);

    std::ostringstream body;
    if (format == "json") {
        Json j;
        if (!bus.empty()) {
            j["bus"] = bus;
        }
        j["case"] = case_json(two_bus);
        j["substation"] = {{"load_p", number(substation.s_load.p)},
                           {"load_q", number(substation.s_load.q)},
                           {"q_comp", number(substation.q_comp)}};
        j["binding"] = to_string(report.binding);
        j["lambda_prime"] = number(report.lambda_prime);
        j["marginal"] = point_json(report.marginal);
        j["marginal"]["p_gen_total"] = number(generator_output(report.marginal.sg, substation).p);
        j["marginal"]["q0_sub"] = number(substation_power(report.marginal.s0, substation).q);
        if (report.thermal) {
            j["thermal"] = point_json(*report.thermal);
            j["thermal"]["p_gen_total"] = number(generator_output(report.thermal->sg, substation).p);
            j["thermal"]["q0_sub"] = number(substation_power(report.thermal->s0, substation).q);
        } else {
            j["thermal"] = nullptr;
        }
        body << j.dump(2) << '\n';
    } else {
        CsvWriter csv(body);
        csv.header({"limit", "p_gen", "q_gen", "p0", "q0", "vg", "current", "loss_p", "loss_q", "efficiency",
                    "pf_gen", "pf_sub", "branch", "p_gen_total", "binding", "lambda_prime"});
        auto row = [&](std::string_view name, const OperatingPoint& pt) {
            csv.text(name)
                .cell(pt.sg.p)
                .cell(pt.sg.q)
                .cell(pt.s0.p)
                .cell(pt.s0.q)
                .cell(pt.vg)
                .cell(pt.current)
                .cell(pt.losses.p)
                .cell(pt.losses.q)
                .cell(pt.efficiency)
                .cell(pt.pf_gen)
                .cell(pt.pf_sub)
                .text(to_string(pt.branch))
                .cell(generator_output(pt.sg, substation).p)
                .text(to_string(report.binding))
                .cell(report.lambda_prime);
            csv.end_row();
        };
        row("marginal", report.marginal);
        if (report.thermal) {
            row("thermal", *report.thermal);
        }
    }
    write_output(opt, out, body.str());
    return kExitOk;
}

int cmd_curves(const Options& opt, std::ostream& out)
{
    const std::string format = opt.format.empty() ? "csv" : opt.format;
    require_format(format);
    if (!(opt.lambda_min > 0.0) || !(opt.lambda_max >= opt.lambda_min) || opt.lambda_points < 1 ||
        !std::isfinite(opt.lambda_max)) {
        throw UsageError("lambda range needs 0 < lambda-min <= lambda-max and lambda-points >= 1");
    }
    if (opt.lambda_points == 1 && opt.lambda_max != opt.lambda_min) {
        throw UsageError("a single-point lambda grid needs lambda-min == lambda-max");
    }
    if (!(opt.z_mag > 0.0)) {
        throw UsageError("--z-mag must be positive");
    }

    std::ostringstream body;
    CsvWriter csv(body);
    Json rows = Json::array();
    if (format == "csv") {
        csv.header({"lambda", "pg_marginal", "pg_upf", "pg_bdry", "p0_marginal", "efficiency", "pf_gen", "pf_sub"});
    }
    const double log_min = std::log(opt.lambda_min);
    const double log_max = std::log(opt.lambda_max);
    for (int i = 0; i < opt.lambda_points; ++i) {
        double lambda = opt.lambda_min;
        if (opt.lambda_points > 1) {
            lambda = std::exp(log_min + (log_max - log_min) * i / (opt.lambda_points - 1));
        }
        if (i == opt.lambda_points - 1) {
            lambda = opt.lambda_max;
        }
        const double scale = opt.z_mag / std::sqrt(1.0 + lambda * lambda);
        TwoBusCase c{opt.v0.value_or(1.0), {lambda * scale, scale}, opt.v_plus, 1.0, std::nullopt};
        const auto marginal = marginal_limit(c);
        const auto upf = upf_generation(c);
        const double bdry = boundary_generation(c);
        if (format == "csv") {
            csv.cell(lambda)
                .cell(marginal.sg.p)
                .cell(upf)
                .cell(bdry)
                .cell(marginal.s0.p)
                .cell(marginal.efficiency)
                .cell(marginal.pf_gen)
                .cell(marginal.pf_sub);
            csv.end_row();
        } else {
            Json row;
            row["lambda"] = number(lambda);
            row["pg_marginal"] = number(marginal.sg.p);
            row["pg_upf"] = number(upf);
            row["pg_bdry"] = number(bdry);
            row["p0_marginal"] = number(marginal.s0.p);
            row["efficiency"] = number(marginal.efficiency);
            row["pf_gen"] = number(marginal.pf_gen);
            row["pf_sub"] = number(marginal.pf_sub);
            rows.push_back(std::move(row));
        }
    }
    if (format == "json") {
        body << rows.dump(2) << '\n';
    }
    write_output(opt, out, body.str());
    return kExitOk;
}

std::string frontier_csv(const SweepReport& report)
{
    std::ostringstream body;
    CsvWriter csv(body);
    csv.header({"p_gen", "p0_sub", "p0_sub_est", "p0_sub_locus", "max_current", "current_est", "current_locus",
                "q_gen", "q_gen_locus", "vg", "voltage_binding"});
    for (const auto& rec : frontier_curves(report)) {
        csv.cell(rec.p_gen)
            .cell(rec.p0_sub)
            .cell(rec.p0_sub_estimated)
            .cell(rec.p0_sub_locus)
            .cell(rec.max_current)
            .cell(rec.current_estimated)
            .cell(rec.current_locus)
            .cell(rec.q_gen)
            .cell(rec.q_gen_locus)
            .cell(rec.vg)
            .text(rec.voltage_binding ? "1" : "0");
        csv.end_row();
    }
    return body.str();
}

int cmd_sweep(const Options& opt, std::ostream& out)
{
    const std::string format = opt.format.empty() ? "json" : opt.format;
    require_format(format);
    const auto model = load_model(opt);
    const auto bus = bus_of(opt);

    SweepConfig config;
    config.p = {opt.p_min, opt.p_max, opt.p_step};
    config.q = {opt.q_min, opt.q_max, opt.q_step};
    try {
        (void)config.p.count();
        (void)config.q.count();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    config.v_plus = opt.v_plus;
    // Inline mode already put --i-plus on the single branch.
    if (!opt.feeder.empty()) {
        config.ampacity = opt.i_plus;
    }
    config.p_plus = opt.p_plus;
    config.q_comp = opt.q_comp;
    config.threads = opt.threads;
    const auto report = run_sweep(model, bus, config);

    std::ostringstream body;
    if (format == "json") {
        Json j;
        j["bus"] = report.bus;
        j["case"] = case_json(report.equivalent.two_bus);
        j["grid"] = {{"p_min", number(config.p.min)}, {"p_max", number(config.p.max)},
                     {"p_step", number(config.p.step)}, {"q_min", number(config.q.min)},
                     {"q_max", number(config.q.max)}, {"q_step", number(config.q.step)},
                     {"points", report.points_evaluated}, {"feasible", report.points_feasible},
                     {"frontier", report.frontier.size()}};
        j["measured"] = {{"p_gen_marginal", number(report.measured_marginal)},
                         {"p_gen_thermal", number(report.measured_thermal)},
                         {"p0_sub_marginal", number(report.measured_marginal_p0)},
                         {"p0_sub_thermal", number(report.measured_thermal_p0)}};
        j["predicted"] = {{"binding", to_string(report.predicted.binding)},
                          {"p_gen_marginal", number(report.predicted_marginal_gen)},
                          {"p_gen_thermal", number(report.predicted_thermal_gen)},
                          {"p0_sub_marginal", number(report.predicted_marginal_sub)},
                          {"p0_sub_thermal", number(report.predicted_thermal_sub)}};
        j["errors"] = {{"e_p_gen_marginal", number(report.errors.marginal_gen)},
                       {"e_p_gen_thermal", number(report.errors.thermal_gen)},
                       {"e_p0_sub_marginal", number(report.errors.marginal_sub)},
                       {"e_p0_sub_thermal", number(report.errors.thermal_sub)}};
        body << j.dump(2) << '\n';
    } else {
        CsvWriter csv(body);
        csv.header({"bus", "e_p_gen_marginal", "e_p_gen_thermal", "e_p0_sub_marginal", "e_p0_sub_thermal"});
        csv.text(report.bus)
            .cell(report.errors.marginal_gen)
            .cell(report.errors.thermal_gen)
            .cell(report.errors.marginal_sub)
            .cell(report.errors.thermal_sub);
        csv.end_row();
    }
    write_output(opt, out, body.str());

    if (!opt.frontier_out.empty()) {
        Options frontier_opt = opt;
        frontier_opt.out = opt.frontier_out;
        write_output(frontier_opt, out, frontier_csv(report));
    }
    return kExitOk;
}

int cmd_equivalent(const Options& opt, std::ostream& out)
{
    const std::string format = opt.format.empty() ? "json" : opt.format;
    require_format(format);
    if (opt.feeder.empty()) {
        throw UsageError("equivalent needs --feeder and --bus");
    }
    const auto model = load_model(opt);
    const auto eq = two_bus_equivalent(model, opt.bus, opt.v_plus, opt.i_plus, opt.p_plus, opt.q_comp);
    const auto& c = eq.two_bus;
    const auto& load = eq.substation.s_load;
    const double load_angle = load.magnitude() > 0.0 ? std::atan2(load.q, load.p) * 180.0 / std::numbers::pi : 0.0;

    std::ostringstream body;
    if (format == "json") {
        Json j;
        j["bus"] = opt.bus;
        j["lambda"] = number(c.lambda());
        j["z_mag"] = number(c.z.magnitude());
        j["r"] = number(c.z.r);
        j["x"] = number(c.z.x);
        j["v0"] = number(c.v0);
        j["v_plus"] = number(c.v_plus);
        j["i_plus"] = number(c.i_plus);
        j["p_plus"] = number(c.p_plus);
        j["s_load_p"] = number(load.p);
        j["s_load_q"] = number(load.q);
        j["s_load_mag"] = number(load.magnitude());
        j["s_load_angle_deg"] = number(load_angle);
        if (const auto& base = model.base()) {
            j["si"] = {{"r_ohm", number(c.z.r * base->z_base_ohm())},
                       {"x_ohm", number(c.z.x * base->z_base_ohm())},
                       {"i_plus_a", number(c.i_plus * base->i_base_a())},
                       {"s_load_va", number(load.magnitude() * base->s_base_va)}};
        }
        body << j.dump(2) << '\n';
    } else {
        CsvWriter csv(body);
        csv.header({"bus", "lambda", "z_mag", "r", "x", "v0", "v_plus", "i_plus", "p_plus", "s_load_p", "s_load_q",
                    "s_load_mag", "s_load_angle_deg"});
        csv.text(opt.bus)
            .cell(c.lambda())
            .cell(c.z.magnitude())
            .cell(c.z.r)
            .cell(c.z.x)
            .cell(c.v0)
            .cell(c.v_plus)
            .cell(c.i_plus)
            .cell(c.p_plus)
            .cell(load.p)
            .cell(load.q)
            .cell(load.magnitude())
            .cell(load_angle);
        csv.end_row();
    }
    write_output(opt, out, body.str());
    return kExitOk;
}

void add_io_options(CLI::App* sub, Options& opt)
{
    sub->add_option("--format", opt.format, "Output format: csv or json");
    sub->add_option("--out", opt.out, "Output path, '-' for standard output");
}

CLI::Option* add_feeder_options(CLI::App* sub, Options& opt)
{
    auto* feeder = sub->add_option("--feeder", opt.feeder, "Feeder description file");
    sub->add_option("--bus", opt.bus, "Generator bus id");
    return feeder;
}

void add_inline_options(CLI::App* sub, Options& opt, CLI::Option* feeder)
{
    auto* r = sub->add_option("--r", opt.r, "Line resistance (pu)");
    auto* x = sub->add_option("--x", opt.x, "Line reactance (pu)");
    r->excludes(feeder);
    x->excludes(feeder);
    sub->add_option("--v0", opt.v0, "Source voltage (pu)")->excludes(feeder);
}

void add_constraint_options(CLI::App* sub, Options& opt)
{
    sub->add_option("--v-plus", opt.v_plus, "Upper voltage limit (pu)");
    sub->add_option("--i-plus", opt.i_plus, "Current limit (pu)");
    sub->add_option("--p-plus", opt.p_plus, "Substation real power limit (pu)");
    sub->add_option("--q-comp", opt.q_comp, "Substation reactive compensation (pu)");
}

}  // namespace

std::string format_number(double value)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    if (value == 0.0) {
        value = 0.0;  // drop the sign of negative zero
    }
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 12);
    (void)ec;
    return {buffer, ptr};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Loss-induced maximum power transfer limits for radial feeders", "lossmpt"};
    app.require_subcommand(1);
    Options opt;

    auto* limits = app.add_subcommand("limits", "Thermal and marginal limits of a two-bus case");
    add_inline_options(limits, opt, add_feeder_options(limits, opt));
    add_constraint_options(limits, opt);
    add_io_options(limits, opt);

    auto* curves = app.add_subcommand("curves", "Marginal-limit metrics over a log-spaced R/X grid");
    curves->add_option("--v0", opt.v0, "Source voltage (pu)");
    curves->add_option("--v-plus", opt.v_plus, "Upper voltage limit (pu)");
    curves->add_option("--z-mag", opt.z_mag, "Line impedance magnitude (pu)");
    curves->add_option("--lambda-min", opt.lambda_min, "Smallest R/X ratio");
    curves->add_option("--lambda-max", opt.lambda_max, "Largest R/X ratio");
    curves->add_option("--lambda-points", opt.lambda_points, "Number of grid points");
    add_io_options(curves, opt);

    auto* sweep = app.add_subcommand("sweep", "Grid power-flow sweep against the closed-form limits");
    add_inline_options(sweep, opt, add_feeder_options(sweep, opt));
    add_constraint_options(sweep, opt);
    sweep->add_option("--p-min", opt.p_min, "Smallest generator P (pu)");
    sweep->add_option("--p-max", opt.p_max, "Largest generator P (pu)");
    sweep->add_option("--p-step", opt.p_step, "Generator P step (pu)");
    sweep->add_option("--q-min", opt.q_min, "Smallest generator Q (pu)");
    sweep->add_option("--q-max", opt.q_max, "Largest generator Q (pu)");
    sweep->add_option("--q-step", opt.q_step, "Generator Q step (pu)");
    sweep->add_option("--threads", opt.threads, "Worker threads, 0 for all cores");
    sweep->add_option("--frontier-out", opt.frontier_out, "Write the frontier curves as CSV to this path");
    add_io_options(sweep, opt);

    auto* equivalent = app.add_subcommand("equivalent", "Two-bus equivalent of a feeder bus");
    add_feeder_options(equivalent, opt);
    add_constraint_options(equivalent, opt);
    add_io_options(equivalent, opt);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (limits->parsed()) {
            return cmd_limits(opt, out);
        }
        if (curves->parsed()) {
            return cmd_curves(opt, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(opt, out);
        }
        return cmd_equivalent(opt, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: file not found or unreadable: " << e.path1().string() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidBus& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitComputation;
    }
}

}  // namespace lossmpt::cli
