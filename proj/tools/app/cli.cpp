#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "flexstage/errors.hpp"
#include "report.hpp"

namespace flexbench {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flexure stage modeling workbench", "flexbench"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string units = "mm";
    app.add_option("--config", config_path, "Workbench JSON config (default: built-in calibrated config)");
    auto* seed_opt = app.add_option("--seed", seed, "Optimizer seed, overrides the config");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--units", units, "Length unit of outputs")->check(CLI::IsMember({"mm", "si"}))->capture_default_str();

    StiffnessOptions so;
    auto* stiff = app.add_subcommand("stiffness", "Motional/lateral stiffness per flexure family");
    stiff->add_option("--family", so.family, "xg, xd, zg, zd or all")
        ->check(CLI::IsMember({"all", "xg", "xd", "zg", "zd"}))
        ->capture_default_str();
    stiff->add_flag("--verify", so.verify, "Cross-check against the beam-FE oracle");
    stiff->add_option("--fe-elements", so.fe_elements, "FE elements per beam")->check(CLI::Range(4, 256));

    SweepOptions swo;
    auto* sweep = app.add_subcommand("sweep", "Thickness/length/width grid sweep");
    sweep->add_option("--family", swo.family, "Base family")->check(CLI::IsMember({"xg", "xd", "zg", "zd"}));
    sweep->add_option("--t", swo.t_mm, "Thickness values (mm)")->delimiter(',');
    sweep->add_option("--l", swo.l_mm, "Length values (mm)")->delimiter(',');
    sweep->add_option("--b", swo.b_mm, "Width values (mm)")->delimiter(',');
    sweep->add_flag("--cabinet", swo.cabinet, "Write only the points on the three visible cube faces");

    OptimizeOptions oo;
    auto* opt = app.add_subcommand("optimize", "Constrained multi-objective flexure design");
    opt->add_option("--axis", oo.axis, "xy or z")->check(CLI::IsMember({"xy", "z"}))->capture_default_str();
    opt->add_flag("--timing", oo.timing, "Record wall time in the run metadata");

    ModalOptions mo;
    auto* modal = app.add_subcommand("modal", "Natural frequencies, chain modes and Bode data");
    modal->add_option("--fmin", mo.f_min_hz, "Bode start frequency (Hz)");
    modal->add_option("--fmax", mo.f_max_hz, "Bode end frequency (Hz)");
    modal->add_option("--points", mo.points, "Bode points");
    modal->add_flag("--identify", mo.identify, "Swept-sine identification of each plant");

    SimulateOptions si;
    auto* sim = app.add_subcommand("simulate", "Feedforward + PID path tracking");
    sim->add_option("--path", si.path, "circle-xy, circle-yz, circle-xz, crown or raster")
        ->check(CLI::IsMember({"circle-xy", "circle-yz", "circle-xz", "crown", "raster"}))
        ->capture_default_str();
    sim->add_option("--duration", si.duration_s, "Simulated time (s)");

    auto* verify = app.add_subcommand("verify", "Oracle, plant and discrepancy checks");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Markdown summary of a run directory");
    report->add_option("dir", report_dir, "Run directory (default: --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        RunContext ctx;
        ctx.cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (*seed_opt) ctx.cfg.optimizer.ga.seed = seed;
        ctx.out_dir = out_dir;
        ctx.si_units = units == "si";
        ctx.log = &out;

        if (*stiff) return cmd_stiffness(ctx, so);
        if (*sweep) return cmd_sweep(ctx, swo);
        if (*opt) return cmd_optimize(ctx, oo);
        if (*modal) return cmd_modal(ctx, mo);
        if (*sim) return cmd_simulate(ctx, si);
        if (*verify) return cmd_verify(ctx);
        if (*report) {
            const std::filesystem::path dir = report_dir.empty() ? ctx.out_dir : std::filesystem::path(report_dir);
            std::string text;
            try {
                text = build_report(dir);
            } catch (const MissingArtifacts& e) {
                err << "error: report: missing artifacts in " << dir.string() << ":\n";
                for (const auto& n : e.names()) err << "  " << n << "\n";
                return kConfigError;
            }
            write_text(dir / "report.md", text);
            out << "wrote " << (dir / "report.md").string() << "\n";
            return kOk;
        }
    } catch (const flexstage::ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return kConfigError;
    } catch (const flexstage::DomainError& e) {
        err << "error: invalid input: " << e.what() << "\n";
        return kConfigError;
    } catch (const flexstage::NumericalError& e) {
        err << "error: numerical: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalError;
    }
    return kConfigError;
}

}  // namespace flexbench
