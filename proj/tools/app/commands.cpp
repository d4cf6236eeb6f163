#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "flexstage/errors.hpp"
#include "flexstage/fe_oracle.hpp"
#include "flexstage/mcpf.hpp"
#include "flexstage/motion.hpp"
#include "flexstage/optimizer.hpp"
#include "flexstage/stage.hpp"
#include "internal.hpp"

namespace flexbench {

using namespace flexstage;
using json = nlohmann::ordered_json;

std::ostream& RunContext::out() const { return log ? *log : std::cout; }

void write_text(const std::filesystem::path& p, const std::string& text) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::map<std::string, StiffnessReport> family_reports(const WorkbenchConfig& c) {
    std::map<std::string, StiffnessReport> r;
    for (const auto& [name, p] : c.stage.families) r[name] = compute_stiffness(p, c.material, name);
    return r;
}

AxisSummary axis_summary(const WorkbenchConfig& c, const std::map<std::string, StiffnessReport>& r) {
    AxisSummary s;
    s.k_xy = axis_stiffness_xy(r.at("xd").k_motional, r.at("xg").k_motional);
    s.k_z = axis_stiffness_z(r.at("zg").k_motional, r.at("zd").k_motional);
    // Diagonal model, so each axis keeps its own frequency (unsorted).
    const double k[3] = {s.k_xy, s.k_xy, s.k_z};
    for (int i = 0; i < 3; ++i) s.f_hz[i] = std::sqrt(k[i] / c.stage.masses[i]) / (2 * M_PI);
    return s;
}

namespace {

json wrench_json(const Wrench& w) {
    Vec6 v = w.packed();
    return json::array({v(0), v(1), v(2), v(3), v(4), v(5)});
}

json family_json(const RunContext& ctx, const McpfParams& p, const StiffnessReport& r) {
    const std::string u = "_" + ctx.len_unit();
    json j;
    j["family"] = r.family;
    j["thickness" + u] = ctx.len(p.thickness);
    j["length" + u] = ctx.len(p.length);
    j["width" + u] = ctx.len(p.width);
    j["layer_count"] = p.layer_count;
    j["rigid_link_span" + u] = ctx.len(p.span());
    j["load_offset_ratio"] = p.load_offset_ratio;
    j["k_motional_N_per_m"] = r.k_motional;
    j["k_lateral_N_per_m"] = r.k_lateral;
    j["eta"] = r.eta;
    j["slenderness_warning"] = p.slenderness_warning();
    json mot = json::object(), lat = json::object();
    for (std::size_t i = 0; i < r.reaction_labels.size(); ++i) {
        std::string label(1, r.reaction_labels[i]);
        mot[label] = wrench_json(r.motional_reactions[i]);
        lat[label] = wrench_json(r.lateral_reactions[i]);
    }
    j["reactions_per_unit_drive"] = {{"components", {"Fx_N", "Fy_N", "Fz_N", "Mx_N_m", "My_N_m", "Mz_N_m"}},
                                     {"motional", mot},
                                     {"lateral", lat}};
    return j;
}

double rel(double a, double ref) { return std::abs(a - ref) / std::abs(ref); }

}  // namespace

FeCheck fe_check(const McpfParams& p, const Material& m, int nel) {
    FeCheck c;
    HalfMcpfSkeleton sk = build_half_skeleton(p);
    for (LoadKind kind : {LoadKind::Motional, LoadKind::Lateral}) {
        const LoadCase lc = kind == LoadKind::Motional ? LoadCase::motional() : LoadCase::lateral();
        ReactionSolution cs = solve_reactions(strain_energy_form(sk, lc, m), 1.0);
        FeStiffness fe = fe_stiffness(sk, lc, m, nel);
        const double k_c = 1.0 / cs.compliance;
        double scale = 0, diff = 0;
        for (std::size_t i = 0; i < cs.reactions.size(); ++i) {
            Vec6 a = cs.reactions[i].packed(), b = fe.reactions[i].packed();
            scale = std::max(scale, a.cwiseAbs().maxCoeff());
            diff = std::max(diff, (a - b).cwiseAbs().maxCoeff());
        }
        const int i = kind == LoadKind::Motional ? 0 : 1;
        c.k_castigliano[i] = 2 * k_c;
        c.k_fe[i] = 2 * fe.k_half;
        c.rel_error[i] = rel(fe.k_half, k_c);
        c.reaction_rel_error[i] = scale > 0 ? diff / scale : 0;
    }
    return c;
}

int cmd_stiffness(const RunContext& ctx, const StiffnessOptions& o) {
    const WorkbenchConfig& c = ctx.cfg;
    std::vector<std::string> names;
    if (o.family == "all") {
        names = {"xd", "xg", "zd", "zg"};
    } else {
        if (!c.stage.families.count(o.family)) throw ConfigError("families." + o.family, "unknown family");
        names = {o.family};
    }
    auto reports = family_reports(c);
    AxisSummary ax = axis_summary(c, reports);

    json j;
    j["units"] = {{"length", ctx.len_unit()}, {"stiffness", "N/m"}, {"frequency", "Hz"}};
    j["material"] = {{"youngs_modulus_GPa", c.material.youngs_modulus / 1e9},
                     {"shear_modulus_GPa", c.material.shear_modulus / 1e9}};
    json fams = json::array();
    for (const auto& n : names) fams.push_back(family_json(ctx, c.stage.families.at(n), reports.at(n)));
    j["families"] = fams;
    j["axes"] = {{"xy",
                  {{"k_axis_N_per_m", ax.k_xy},
                   {"eta_decoupler", reports.at("xd").eta},
                   {"eta_guider", reports.at("xg").eta},
                   {"mass_kg", c.stage.masses[0]},
                   {"natural_frequency_Hz", ax.f_hz[0]}}},
                 {"z",
                  {{"k_axis_N_per_m", ax.k_z},
                   {"eta_decoupler", reports.at("zd").eta},
                   {"eta_guider", reports.at("zg").eta},
                   {"mass_kg", c.stage.masses[2]},
                   {"natural_frequency_Hz", ax.f_hz[2]}}}};

    auto& out = ctx.out();
    for (const auto& n : names) {
        const auto& r = reports.at(n);
        out << n << ": k_motional " << fmt("%.1f", r.k_motional) << " N/m, k_lateral " << fmt("%.1f", r.k_lateral)
            << " N/m, eta " << fmt("%.2f", r.eta) << "\n";
        if (c.stage.families.at(n).slenderness_warning())
            out << "  warning: " << n << " has l < 20 t, outside the slender-beam range\n";
    }
    out << "k_xy " << fmt("%.1f", ax.k_xy) << " N/m, k_z " << fmt("%.1f", ax.k_z) << " N/m\n";

    if (o.verify) {
        json v = json::array();
        out << "beam-FE check (relative error of Castigliano vs FE):\n";
        for (const auto& n : names) {
            FeCheck fc = fe_check(c.stage.families.at(n), c.material, o.fe_elements);
            v.push_back({{"family", n},
                         {"k_motional_fe_N_per_m", fc.k_fe[0]},
                         {"k_lateral_fe_N_per_m", fc.k_fe[1]},
                         {"rel_error_motional", fc.rel_error[0]},
                         {"rel_error_lateral", fc.rel_error[1]},
                         {"reaction_rel_error_motional", fc.reaction_rel_error[0]},
                         {"reaction_rel_error_lateral", fc.reaction_rel_error[1]}});
            out << "  " << n << ": motional " << fmt("%.3e", fc.rel_error[0]) << ", lateral "
                << fmt("%.3e", fc.rel_error[1]) << "\n";
        }
        j["verification"] = v;
    }

    const std::string file = o.family == "all" ? "stiffness.json" : "stiffness_" + o.family + ".json";
    write_text(ctx.out_dir / file, j.dump(2) + "\n");
    return kOk;
}

int cmd_sweep(const RunContext& ctx, const SweepOptions& o) {
    const WorkbenchConfig& c = ctx.cfg;
    if (!c.stage.families.count(o.family)) throw ConfigError("families." + o.family, "unknown family");
    SweepGrid g;
    for (double v : o.t_mm) g.thickness.push_back(v * 1e-3);
    for (double v : o.l_mm) g.length.push_back(v * 1e-3);
    for (double v : o.b_mm) g.width.push_back(v * 1e-3);
    std::vector<SweepRow> rows = parameter_sweep(g, c.stage.families.at(o.family), c.material);
    SweepFlags flags = sweep_monotonicity(rows, g);
    std::vector<SweepRow> shown = o.cabinet ? cabinet_subset(rows, g) : rows;

    const std::string u = ctx.len_unit();
    std::string csv = "t_" + u + ",l_" + u + ",b_" + u + ",k_motional_N_per_m,k_lateral_N_per_m,eta\n";
    const char* lf = ctx.si_units ? "%.6e" : "%.4f";
    for (const auto& r : shown) {
        csv += fmt(lf, ctx.len(r.thickness)) + "," + fmt(lf, ctx.len(r.length)) + "," + fmt(lf, ctx.len(r.width)) +
               "," + fmt("%.6f", r.k_motional) + "," + fmt("%.6f", r.k_lateral) + "," + fmt("%.6f", r.eta) + "\n";
    }
    write_text(ctx.out_dir / (o.cabinet ? "sweep_cabinet.csv" : "sweep.csv"), csv);

    json j;
    j["base_family"] = o.family;
    j["points"] = rows.size();
    j["rows_written"] = shown.size();
    j["cabinet"] = o.cabinet;
    j["k_motional_increasing_in_t"] = flags.k_increasing_in_t;
    j["k_motional_decreasing_in_l"] = flags.k_decreasing_in_l;
    j["eta_increasing_in_b"] = flags.eta_increasing_in_b;
    write_text(ctx.out_dir / "sweep_flags.json", j.dump(2) + "\n");

    ctx.out() << "sweep: " << shown.size() << " rows (" << rows.size() << " evaluated); k up in t "
              << (flags.k_increasing_in_t ? "yes" : "no") << ", k down in l " << (flags.k_decreasing_in_l ? "yes" : "no")
              << ", eta up in b " << (flags.eta_increasing_in_b ? "yes" : "no") << "\n";
    return kOk;
}

json individual_json(const RunContext& ctx, const Individual& ind) {
    json j;
    const std::string u = "_" + ctx.len_unit();
    j["t_g" + u] = ctx.len_from_mm(ind.par[0]);
    j["l_g" + u] = ctx.len_from_mm(ind.par[1]);
    j["t_d" + u] = ctx.len_from_mm(ind.par[2]);
    j["l_d" + u] = ctx.len_from_mm(ind.par[3]);
    j["k_axis_N_per_m"] = ind.objectives[0];
    j["eta_d"] = ind.objectives[1];
    j["eta_g"] = ind.objectives[2];
    j["feasible"] = ind.feasible;
    j["violations"] = {{"stiffness_ceiling", ind.violations[0]},
                       {"eta_d", ind.violations[1]},
                       {"eta_g", ind.violations[2]},
                       {"thickness", ind.violations[3]}};
    if (!ind.diagnostics.empty()) j["diagnostics"] = ind.diagnostics;
    return j;
}

int cmd_optimize(const RunContext& ctx, const OptimizeOptions& o) {
    Axis axis;
    if (o.axis == "xy")
        axis = Axis::XY;
    else if (o.axis == "z")
        axis = Axis::Z;
    else
        throw ConfigError("--axis", "expected xy or z");
    const WorkbenchConfig& c = ctx.cfg;
    OptProblem p = make_problem(c, axis);
    const auto t0 = std::chrono::steady_clock::now();
    ParetoFront front = optimize(p, c.optimizer.ga);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string tag = o.axis;
    write_text(ctx.out_dir / ("front_" + tag + ".csv"), front_csv(front));

    // Configured family geometry is the reference design.
    const bool xy = axis == Axis::XY;
    const McpfParams& g = c.stage.families.at(xy ? "xg" : "zg");
    const McpfParams& d = c.stage.families.at(xy ? "xd" : "zd");
    Individual ref = evaluate(p, {g.thickness * 1e3, g.length * 1e3, d.thickness * 1e3, d.length * 1e3});

    json meta;
    meta["axis"] = tag;
    meta["seed"] = c.optimizer.ga.seed;
    meta["settings"] = {{"population", c.optimizer.ga.population},
                        {"generations", c.optimizer.ga.generations},
                        {"mutation_probability", c.optimizer.ga.mutation_probability},
                        {"crossover_probability", c.optimizer.ga.crossover_probability},
                        {"eta_crossover", c.optimizer.ga.eta_crossover},
                        {"eta_mutation", c.optimizer.ga.eta_mutation}};
    meta["stiffness_ceiling_N_per_m"] = p.stiffness_ceiling();
    meta["evaluations"] = front.evaluations;
    meta["front_size"] = front.members.size();
    meta["final_population"] = {{"min_total_violation", front.final_population.min_total},
                                {"mean_total_violation", front.final_population.mean_total},
                                {"violated_fraction",
                                 {{"stiffness_ceiling", front.final_population.violated_fraction[0]},
                                  {"eta_d", front.final_population.violated_fraction[1]},
                                  {"eta_g", front.final_population.violated_fraction[2]},
                                  {"thickness", front.final_population.violated_fraction[3]}}}};
    if (o.timing) meta["wall_time_s"] = wall;
    write_text(ctx.out_dir / ("optimize_" + tag + "_meta.json"), meta.dump(2) + "\n");

    auto& out = ctx.out();
    if (front.members.empty()) {
        json sel;
        sel["axis"] = tag;
        sel["feasible_front"] = false;
        sel["reference_design"] = individual_json(ctx, ref);
        write_text(ctx.out_dir / ("selected_" + tag + ".json"), sel.dump(2) + "\n");
        out << "optimize " << tag << ": no feasible design; violated fractions ceiling "
            << fmt("%.2f", front.final_population.violated_fraction[0]) << ", eta_d "
            << fmt("%.2f", front.final_population.violated_fraction[1]) << ", eta_g "
            << fmt("%.2f", front.final_population.violated_fraction[2]) << "\n";
        return kInfeasible;
    }

    Selection s = select_design(p, front, SelectionPolicy{c.optimizer.selection_slack});
    json sel;
    sel["axis"] = tag;
    sel["feasible_front"] = true;
    sel["selection_slack"] = c.optimizer.selection_slack;
    sel["slack_satisfied"] = s.slack_satisfied;
    sel["selected"] = individual_json(ctx, s.evaluated);
    sel["reference_design"] = individual_json(ctx, ref);
    write_text(ctx.out_dir / ("selected_" + tag + ".json"), sel.dump(2) + "\n");

    out << "optimize " << tag << ": front " << front.members.size() << " designs, " << front.evaluations
        << " evaluations\n  selected t_g " << fmt("%.2f", s.par[0]) << " l_g " << fmt("%.1f", s.par[1]) << " t_d "
        << fmt("%.2f", s.par[2]) << " l_d " << fmt("%.1f", s.par[3]) << " mm: k " << fmt("%.1f", s.evaluated.objectives[0])
        << " N/m, eta_d " << fmt("%.2f", s.evaluated.objectives[1]) << ", eta_g "
        << fmt("%.2f", s.evaluated.objectives[2]) << "\n";
    if (o.timing) out << "  wall time " << fmt("%.2f", wall) << " s\n";
    return kOk;
}

int cmd_modal(const RunContext& ctx, const ModalOptions& o) {
    const WorkbenchConfig& c = ctx.cfg;
    if (!(o.f_min_hz > 0) || !(o.f_max_hz > o.f_min_hz) || o.points < 2)
        throw ConfigError("--fmin/--fmax/--points", "need 0 < fmin < fmax and at least 2 points");
    auto reports = family_reports(c);
    AxisSummary ax = axis_summary(c, reports);
    auto plants = c.simulation.plants();
    const char* names[] = {"x", "y", "z"};

    json j;
    j["units"] = {{"frequency", "Hz"}, {"stiffness", "N/m"}, {"mass", "kg"}};
    j["lumped_model"] = {{"masses_kg", {c.stage.masses[0], c.stage.masses[1], c.stage.masses[2]}},
                         {"k_axis_N_per_m", {ax.k_xy, ax.k_xy, ax.k_z}},
                         {"natural_frequency_Hz", {ax.f_hz[0], ax.f_hz[1], ax.f_hz[2]}}};

    json pj = json::object();
    std::vector<double> freqs = log_frequencies(o.f_min_hz, o.f_max_hz, o.points);
    for (int i = 0; i < 3; ++i) {
        const Plant2& p = plants[i];
        json a = {{"gain_mm_per_N_s2", c.simulation.gain[i]},
                  {"a1_per_s", c.simulation.a1[i]},
                  {"a0_per_s2", c.simulation.a0[i]},
                  {"mass_kg", p.mass},
                  {"damping_N_s_per_m", p.damping},
                  {"stiffness_N_per_m", p.stiffness},
                  {"natural_frequency_Hz", p.natural_frequency_hz()},
                  {"dc_compliance_mm_per_N", p.dc_compliance_mm_per_n()}};
        auto bode = frequency_response(p, freqs);
        write_text(ctx.out_dir / (std::string("bode_") + names[i] + ".csv"), bode_csv(bode));
        if (o.identify) {
            SweptSineSpec spec;
            spec.sample_time = c.simulation.sample_time_s;
            auto meas = swept_sine_response(p, spec, log_frequencies(1.0, 60.0, 60));
            write_text(ctx.out_dir / (std::string("bode_") + names[i] + "_swept.csv"), bode_csv(meas));
            FitResult f = fit_second_order(meas);
            a["identified"] = {{"gain_mm_per_N_s2", f.gain},
                               {"a1_per_s", f.a1},
                               {"a0_per_s2", f.a0},
                               {"natural_frequency_Hz", f.plant.natural_frequency_hz()},
                               {"relative_residual", f.relative_residual},
                               {"ill_conditioned", f.ill_conditioned}};
        }
        pj[names[i]] = a;
    }
    j["plants"] = pj;

    json chains = json::object();
    for (ChainKind kind : {ChainKind::XY, ChainKind::Z}) {
        ChainModel cm = build_chain_model(reports, c.stage.chain_masses, kind, c.stage.c5, c.stage.c8);
        Transmission tr = static_transmission(cm, 1.0);
        json ks = json::array();
        for (double k : cm.k) ks.push_back(k);
        chains[kind == ChainKind::XY ? "xy" : "z"] = {{"springs_N_per_m", ks},
                                                      {"modes_Hz", chain_modes(cm)},
                                                      {"transmission_loss", tr.loss},
                                                      {"port_leakage", port_leakage(cm)}};
    }
    j["chains"] = chains;
    write_text(ctx.out_dir / "modal.json", j.dump(2) + "\n");

    auto& out = ctx.out();
    out << "lumped model: " << fmt("%.2f", ax.f_hz[0]) << " / " << fmt("%.2f", ax.f_hz[1]) << " / "
        << fmt("%.2f", ax.f_hz[2]) << " Hz\n";
    out << "plants: " << fmt("%.2f", plants[0].natural_frequency_hz()) << " / "
        << fmt("%.2f", plants[1].natural_frequency_hz()) << " / " << fmt("%.2f", plants[2].natural_frequency_hz())
        << " Hz\n";
    return kOk;
}

}  // namespace flexbench
