#include <cmath>

#include "json.hpp"

#include "commands.hpp"
#include "flexstage/errors.hpp"
#include "flexstage/motion.hpp"
#include "flexstage/stage.hpp"
#include "internal.hpp"

namespace flexbench {

using namespace flexstage;
using json = nlohmann::ordered_json;

namespace {

const char* const kAxisNames[] = {"x", "y", "z"};

std::array<FfPidController, 3> controllers(const WorkbenchConfig& c) {
    const SimulationConfig& s = c.simulation;
    auto plants = s.plants();
    std::array<FfPidController, 3> ctrl;
    AxisSummary ax;
    if (s.feedforward == FeedforwardSource::Stage) ax = axis_summary(c, family_reports(c));
    const double k_stage[3] = {ax.k_xy, ax.k_xy, ax.k_z};
    for (int i = 0; i < 3; ++i) {
        FfPidController& k = ctrl[i];
        k.kp = s.kp;
        k.ki = s.ki;
        k.kd = s.kd;
        k.sample_time = s.sample_time_s;
        k.filter_n = s.filter_n;
        k.integral_form = s.integral_form;
        k.hold = s.hold;
        k.feedforward = s.feedforward != FeedforwardSource::None;
        k.model = s.feedforward == FeedforwardSource::Stage
                      ? plant_from_axis(c.stage.masses[i], c.stage.damping[i], k_stage[i])
                      : plants[i];
    }
    return ctrl;
}

PathSpec path_spec(const SimulationConfig& s, const std::string& name) {
    PathSpec p;
    if (name.rfind("circle-", 0) == 0) {
        p.kind = PathKind::Circle;
        p.plane = name.substr(7);
        if (p.plane != "xy" && p.plane != "yz" && p.plane != "xz")
            throw ConfigError("--path", "circle plane must be xy, yz or xz");
        p.amplitude_mm = s.circle_diameter_mm / 2;
        p.frequency_hz = s.circle_frequency_hz;
    } else if (name == "crown") {
        p.kind = PathKind::Crown;
    } else if (name == "raster") {
        p.kind = PathKind::RasterScan;
        p.amplitude_mm = s.raster_width_mm / 2;
        p.frequency_hz = s.raster_frequency_hz;
        p.duration_s = s.raster_duration_s;
    } else {
        throw ConfigError("--path", "expected circle-xy, circle-yz, circle-xz, crown or raster");
    }
    return p;
}

}  // namespace

int cmd_simulate(const RunContext& ctx, const SimulateOptions& o) {
    const WorkbenchConfig& c = ctx.cfg;
    PathSpec spec = path_spec(c.simulation, o.path);
    Path path = make_path(spec);
    double dur = o.duration_s;
    if (!(dur > 0)) dur = path.duration_s > 0 ? path.duration_s : c.simulation.duration_periods * path.period_s;

    SimTrace tr = simulate_tracking(c.simulation.plants(), controllers(c), path, dur);
    const std::string tag = o.path;
    write_text(ctx.out_dir / ("trace_" + tag + ".csv"), trace_csv(tr));

    json j;
    j["path"] = tag;
    const PathSample r0 = path.sample(0.0);
    j["reference"] = {{"kind", path.name},
                      {"start_mm", {r0[0].r, r0[1].r, r0[2].r}},
                      {"period_s", path.period_s},
                      {"duration_s", dur}};
    if (spec.kind == PathKind::Circle) {
        j["reference"]["plane"] = spec.plane;
        j["reference"]["radius_mm"] = spec.amplitude_mm;
        j["reference"]["frequency_Hz"] = spec.frequency_hz;
    }
    j["sample_time_s"] = c.simulation.sample_time_s;
    j["metrics_window_start_s"] = tr.t.empty() ? 0.0 : tr.t[tr.window_start];
    json maxe = json::object(), rmse = json::object();
    for (int i = 0; i < 3; ++i) {
        if (!tr.active[i]) continue;
        maxe[kAxisNames[i]] = tr.metrics[i].maxe_um;
        rmse[kAxisNames[i]] = tr.metrics[i].rmse_um;
    }
    j["MAXE_um"] = maxe;
    j["RMSE_um"] = rmse;

    if (spec.kind == PathKind::RasterScan) {
        // z stays passive; both driven xy chains leak into it through the port spring.
        auto reports = family_reports(c);
        ChainModel xy = build_chain_model(reports, c.stage.chain_masses, ChainKind::XY, c.stage.c5, c.stage.c8);
        std::vector<double> drive(tr.t.size());
        for (std::size_t k = 0; k < drive.size(); ++k) drive[k] = tr.pos[0][k] + tr.pos[1][k];
        std::vector<double> z = model_coupling_series(xy, drive);
        j["model_coupling_percent"] = {{"z", coupling_rate(z, 2 * spec.amplitude_mm)}};
    }
    write_text(ctx.out_dir / ("metrics_" + tag + ".json"), j.dump(2) + "\n");

    auto& out = ctx.out();
    out << "simulate " << tag << " (" << fmt("%.3f", dur) << " s):";
    for (int i = 0; i < 3; ++i)
        if (tr.active[i])
            out << " " << kAxisNames[i] << " MAXE " << fmt("%.4f", tr.metrics[i].maxe_um) << " um RMSE "
                << fmt("%.4f", tr.metrics[i].rmse_um) << " um;";
    out << "\n";
    return kOk;
}

int cmd_verify(const RunContext& ctx) {
    const WorkbenchConfig& c = ctx.cfg;
    auto& out = ctx.out();
    json j;

    json fe = json::array();
    double worst_m = 0, worst_l = 0;
    for (const char* n : {"xd", "xg", "zd", "zg"}) {
        FeCheck fc = fe_check(c.stage.families.at(n), c.material);
        worst_m = std::max(worst_m, fc.rel_error[0]);
        worst_l = std::max(worst_l, fc.rel_error[1]);
        fe.push_back({{"family", n},
                      {"k_motional_N_per_m", fc.k_castigliano[0]},
                      {"k_motional_fe_N_per_m", fc.k_fe[0]},
                      {"k_lateral_N_per_m", fc.k_castigliano[1]},
                      {"k_lateral_fe_N_per_m", fc.k_fe[1]},
                      {"rel_error_motional", fc.rel_error[0]},
                      {"rel_error_lateral", fc.rel_error[1]},
                      {"reaction_rel_error_motional", fc.reaction_rel_error[0]},
                      {"reaction_rel_error_lateral", fc.reaction_rel_error[1]}});
    }
    j["fe_oracle"] = fe;
    out << "FE vs Castigliano: worst motional " << fmt("%.2e", worst_m) << ", lateral " << fmt("%.2e", worst_l) << "\n";

    auto plants = c.simulation.plants();
    json pl = json::object();
    for (int i = 0; i < 3; ++i) {
        const double k_dc = 1000.0 / plants[i].dc_compliance_mm_per_n();
        pl[kAxisNames[i]] = {{"natural_frequency_Hz", plants[i].natural_frequency_hz()},
                             {"dc_stiffness_N_per_m", k_dc},
                             {"measured_stiffness_N_per_m", c.discrepancy.k_actual[i]},
                             {"dc_stiffness_rel_diff", (k_dc - c.discrepancy.k_actual[i]) / c.discrepancy.k_actual[i]}};
    }
    j["plants"] = pl;
    out << "plant frequencies: " << fmt("%.3f", plants[0].natural_frequency_hz()) << " / "
        << fmt("%.3f", plants[1].natural_frequency_hz()) << " / " << fmt("%.3f", plants[2].natural_frequency_hz())
        << " Hz; x DC stiffness " << fmt("%.1f", 1000.0 / plants[0].dc_compliance_mm_per_n()) << " N/m\n";

    json disc = json::object();
    for (int i = 0; i < 3; ++i) {
        Discrepancy d = discrepancy_analysis(c.discrepancy.k_nominal[i], c.discrepancy.k_actual[i],
                                             c.discrepancy.f_nominal_hz[i]);
        disc[kAxisNames[i]] = {{"alpha", d.alpha},
                               {"thickness_error_percent", 100 * d.thickness_error},
                               {"corrected_frequency_Hz", d.corrected_frequency_hz}};
        out << "discrepancy " << kAxisNames[i] << ": alpha " << fmt("%.3f", d.alpha) << ", thickness "
            << fmt("%+.1f", 100 * d.thickness_error) << " %, corrected f " << fmt("%.1f", d.corrected_frequency_hz)
            << " Hz\n";
    }
    j["discrepancy"] = disc;

    json cp = json::object();
    for (int i = 0; i < 3; ++i) {
        std::vector<double> series{c.discrepancy.coupling_max_um[i], c.discrepancy.coupling_min_um[i]};
        cp[kAxisNames[i]] = coupling_rate(series, c.discrepancy.scan_range_mm * 1e3);
    }
    j["coupling_rate_percent"] = cp;

    json poles = json::object();
    auto ctrl = controllers(c);
    for (int i = 0; i < 3; ++i) {
        json a = json::object();
        for (IntegralForm f : {IntegralForm::SampledIntegral, IntegralForm::AsPrinted}) {
            FfPidController k = ctrl[i];
            k.integral_form = f;
            PoleReport pr = closed_loop_poles(plants[i], k);
            a[f == IntegralForm::SampledIntegral ? "sampled_integral" : "as_printed"] = {
                {"spectral_radius", pr.spectral_radius}, {"stable", pr.stable}};
        }
        poles[kAxisNames[i]] = a;
    }
    j["closed_loop"] = poles;
    out << "closed loop spectral radius (x): sampled integral "
        << fmt("%.5f", poles["x"]["sampled_integral"]["spectral_radius"].get<double>()) << ", as printed "
        << fmt("%.5f", poles["x"]["as_printed"]["spectral_radius"].get<double>()) << "\n";

    write_text(ctx.out_dir / "verify.json", j.dump(2) + "\n");
    return kOk;
}

}  // namespace flexbench
