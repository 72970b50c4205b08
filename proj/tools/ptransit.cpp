// Command-line front end: periodic-orbit search, monodromy reduction,
// transit demonstrations, cap maps and continuation sweeps.

#include <ptransit/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace ptransit;
using cli::json;

int report_error(const char *kind, const std::string &stage, const std::string &what, int code) {
    json err = {{"error", kind}, {"message", what}, {"exit_code", code}};
    if (!stage.empty()) err["stage"] = stage;
    std::cerr << err.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Transit orbits around Lagrange periodic orbits of periodically perturbed three-body models"};
    app.require_subcommand(1);

    cli::CommonOptions opts;
    double rel_tol = 0.0, abs_tol = 0.0;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
        sub->add_option("--out", opts.out_dir, "output directory (nothing is written when omitted)");
        sub->add_option("--rel-tol", rel_tol, "integrator relative tolerance");
        sub->add_option("--abs-tol", abs_tol, "integrator absolute tolerance");
        sub->add_option("--threads", opts.threads, "worker threads for ensembles (0 = all cores)");
    };

    using Command = std::function<cli::RunReport(const cli::RunConfig &, cli::RunContext &)>;
    std::vector<std::pair<CLI::App *, Command>> commands;
    auto add = [&](const char *name, const char *help, Command fn) {
        CLI::App *sub = app.add_subcommand(name, help);
        add_common(sub);
        commands.emplace_back(sub, std::move(fn));
    };
    add("lagrange", "Lagrange points, energy thresholds and saddle-center rates (cr3bp)", cli::cmd_lagrange);
    add("find-po", "refine the L1 Lagrange periodic orbit", cli::cmd_find_po);
    add("continue", "natural-parameter continuation from the L1 point (JSON lines on stdout)",
        [](const cli::RunConfig &c, cli::RunContext &ctx) { return cli::cmd_continue(c, ctx, &std::cout); });
    add("monodromy", "monodromy matrix, normal form and symplectic eigenbasis", cli::cmd_monodromy);
    add("transit-demo", "lift boundary samples and verify transit by nonlinear integration",
        cli::cmd_transit_demo);
    add("cap-map", "transit cap and its images under one period forwards and backwards", cli::cmd_cap_map);
    add("pipeline", "find-po, monodromy, normal form and transit demo in one run", cli::cmd_pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report_error("validation", "arguments", e.what(), 2);
    }

    cli::RunContext ctx;
    try {
        if (rel_tol != 0.0) opts.rel_tol = rel_tol;
        if (abs_tol != 0.0) opts.abs_tol = abs_tol;
        ctx.opts = opts;
        ctx.stage = "config";
        const cli::RunConfig cfg = cli::load_config(opts);
        for (auto &[sub, fn] : commands) {
            if (!sub->parsed()) continue;
            const cli::RunReport rep = fn(cfg, ctx);
            if (sub->get_name() == "continue")
                std::cout << json{{"report", rep.to_json()}}.dump() << '\n';
            else
                std::cout << rep.to_json().dump(2) << '\n';
        }
    } catch (const ValidationError &e) {
        return report_error("validation", ctx.stage, e.what(), 2);
    } catch (const NumericalError &e) {
        return report_error("numerical", ctx.stage, e.what(), 3);
    } catch (const std::filesystem::filesystem_error &e) {
        return report_error("validation", ctx.stage, e.what(), 2);
    }
    return 0;
}
