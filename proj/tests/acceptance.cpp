// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "flexstage/calibration.hpp"
#include "flexstage/fe_oracle.hpp"
#include "flexstage/motion.hpp"
#include "flexstage/optimizer.hpp"
#include "flexstage/stage.hpp"

using namespace flexstage;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... v) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

McpfParams mm(double t, double l, double b, double span = 0, double ratio = 0) {
    McpfParams p;
    p.thickness = t * 1e-3;
    p.length = l * 1e-3;
    p.width = b * 1e-3;
    p.rigid_link_span = span * 1e-3;
    p.load_offset_ratio = ratio;
    return p;
}

const Material kAl = Material::aluminium();

FamilyGeometry geometry(const McpfParams& p) {
    FamilyGeometry g;
    g.width_mm = p.width * 1e3;
    g.span_mm = p.rigid_link_span * 1e3;
    g.load_offset_ratio = p.load_offset_ratio;
    g.layer_count = p.layer_count;
    return g;
}

void criterion1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> t(0.3, 0.4), l(20, 50), ratio(-0.6, 0.3);
    const double widths[] = {6, 8, 12};
    double worst_m = 0, worst_l = 0;
    const int n = 12;
    for (int i = 0; i < n; ++i) {
        HalfMcpfSkeleton sk = build_half_skeleton(mm(t(rng), l(rng), widths[i % 3], 0, ratio(rng)));
        for (auto lc : {LoadCase::motional(), LoadCase::lateral()}) {
            const double kc = 1 / solve_reactions(strain_energy_form(sk, lc, kAl), 1.0).compliance;
            const double kf = fe_stiffness(sk, lc, kAl).k_half;
            double& w = lc.kind == LoadKind::Motional ? worst_m : worst_l;
            w = std::max(w, rel(kc, kf));
        }
    }
    const double dt = seconds_since(t0);
    report(1, worst_m < 0.01 && worst_l < 0.05 && dt < 10,
           fmt("%d designs, worst motional %.2e, lateral %.2e, %.2f s", n, worst_m, worst_l, dt));
}

void criterion2() {
    const auto t0 = Clock::now();
    auto bare = [](double t, double l, double b) { return mm(t, l, b); };
    CalibrationResult xy = calibrate_axis(Axis::XY, bare(0.40, 30.5, 12), bare(0.32, 23.0, 8), kAl, {8787.9, 78.69, 72.28});
    CalibrationResult z = calibrate_axis(Axis::Z, bare(0.34, 22.4, 6), bare(0.40, 41.7, 6), kAl, {8932.1, 154.64, 38.68});
    const McpfParams xd = mm(0.40, 30.5, 12, xy.span_decoupler * 1e3, xy.load_offset_ratio);
    const McpfParams xg = mm(0.32, 23.0, 8, xy.span_guider * 1e3, xy.load_offset_ratio);
    const McpfParams zd = mm(0.34, 22.4, 6, z.span_decoupler * 1e3, z.load_offset_ratio);
    const McpfParams zg = mm(0.40, 41.7, 6, z.span_guider * 1e3, z.load_offset_ratio);
    const StiffnessReport rxd = compute_stiffness(xd, kAl), rxg = compute_stiffness(xg, kAl);
    const StiffnessReport rzd = compute_stiffness(zd, kAl), rzg = compute_stiffness(zg, kAl);
    const double kxy = axis_stiffness_xy(rxd.k_motional, rxg.k_motional);
    const double kz = axis_stiffness_z(rzg.k_motional, rzd.k_motional);
    const double dt = seconds_since(t0);
    const double ek = std::max(rel(kxy, 8787.9), rel(kz, 8932.1));
    const double ee = std::max({rel(rxd.eta, 78.69), rel(rxg.eta, 72.28), rel(rzd.eta, 154.64), rel(rzg.eta, 38.68)});
    report(2, ek < 0.10 && ee < 0.15 && dt < 1,
           fmt("k_xm %.1f, k_zm %.1f N/m; eta %.2f/%.2f/%.2f/%.2f; worst k %.1e, eta %.1e; %.3f s", kxy, kz, rxd.eta,
               rxg.eta, rzd.eta, rzg.eta, ek, ee, dt));
}

void criterion3() {
    Eigen::Matrix3d m = Eigen::Vector3d(0.412, 0.412, 0.355).asDiagonal();
    Eigen::Matrix3d k = Eigen::Vector3d(8787.9, 8787.9, 8932.1).asDiagonal();
    const auto f = natural_frequencies(m, k).frequencies_hz;
    const bool ok = std::abs(f[0] - 23.24) < 0.05 && std::abs(f[1] - 23.24) < 0.05 && std::abs(f[2] - 25.25) < 0.05;
    report(3, ok, fmt("%.3f / %.3f / %.3f Hz", f[0], f[1], f[2]));
}

void criterion4() {
    const Plant2 x = plant_from_tf(2295, 92.96, 17060), y = plant_from_tf(2280, 94.36, 17140),
                 z = plant_from_tf(2570, 110.9, 19760);
    const double fx = x.natural_frequency_hz(), fy = y.natural_frequency_hz(), fz = z.natural_frequency_hz();
    const double k_dc = 1000.0 / x.dc_compliance_mm_per_n();
    const bool ok = std::abs(fx - 20.8) < 0.05 && std::abs(fy - 20.8) < 0.05 && std::abs(fz - 22.4) < 0.05 &&
                    std::abs(fx - 20.79) < 0.05 && std::abs(fy - 20.83) < 0.05 && std::abs(fz - 22.38) < 0.05 &&
                    rel(k_dc, 7339) < 0.015;
    report(4, ok, fmt("f_n %.3f / %.3f / %.3f Hz; G_x static stiffness %.1f N/m (%.2f%% from 7339)", fx, fy, fz, k_dc,
                      100 * rel(k_dc, 7339)));
}

bool front_ok(const ParetoFront& f) {
    if (f.members.empty()) return false;
    for (std::size_t i = 0; i < f.members.size(); ++i) {
        if (!f.members[i].feasible) return false;
        for (std::size_t j = 0; j < f.members.size(); ++j)
            if (i != j && dominates(f.members[i].objectives, f.members[j].objectives)) return false;
    }
    return true;
}

void criterion5() {
    OptProblem xy;
    xy.axis = Axis::XY;
    xy.lower = {0.3, 20, 0.3, 30};
    xy.upper = {0.4, 30, 0.4, 40};
    xy.guider = geometry(mm(0.32, 23.0, 8, 0.460809567, -0.571885021));
    xy.decoupler = geometry(mm(0.40, 30.5, 12, 0.644527602, -0.571885021));
    xy.material = kAl;
    OptProblem z = xy;
    z.axis = Axis::Z;
    z.lower = {0.3, 40, 0.3, 20};
    z.upper = {0.4, 50, 0.4, 30};
    z.guider = geometry(mm(0.40, 41.7, 6, 0.829831574, 0.222110643));
    z.decoupler = geometry(mm(0.34, 22.4, 6, 0.167902314, 0.222110643));
    z.eta_decoupler_min = 100;
    z.eta_guider_min = 20;

    const bool ceiling = std::abs(xy.stiffness_ceiling() - 9090.9) < 0.05;
    const Individual cx = evaluate(xy, {0.32, 23.0, 0.40, 30.5});
    const Individual cz = evaluate(z, {0.40, 41.7, 0.34, 22.4});

    const auto t0 = Clock::now();
    const ParetoFront fx = optimize(xy, GaSettings{});
    const ParetoFront fz = optimize(z, GaSettings{});
    const double dt = seconds_since(t0);
    const ParetoFront fx2 = optimize(xy, GaSettings{});
    const bool same = front_csv(fx) == front_csv(fx2);

    const bool ok = ceiling && cx.feasible && cz.feasible && front_ok(fx) && front_ok(fz) && same && dt < 300;
    report(5, ok,
           fmt("chosen designs feasible %s/%s; fronts %zu/%zu members, feasible and nondominated %s/%s; "
               "seed-identical %s; default runs %.1f s",
               cx.feasible ? "yes" : "no", cz.feasible ? "yes" : "no", fx.members.size(), fz.members.size(),
               front_ok(fx) ? "yes" : "no", front_ok(fz) ? "yes" : "no", same ? "yes" : "no", dt));
}

void criterion6() {
    const Discrepancy d = discrepancy_analysis(8832.7, 7339, 25.4);
    const bool ok = std::abs(d.alpha - 0.831) <= 0.001 && std::abs(100 * d.thickness_error + 6.0) <= 0.1 &&
                    std::abs(d.corrected_frequency_hz - 23.2) <= 0.1;
    report(6, ok, fmt("alpha %.4f, thickness error %.2f%%, corrected %.2f Hz", d.alpha, 100 * d.thickness_error,
                      d.corrected_frequency_hz));
}

void criterion7() {
    const std::array<Plant2, 3> plants{plant_from_tf(2295, 92.96, 17060), plant_from_tf(2280, 94.36, 17140),
                                       plant_from_tf(2570, 110.9, 19760)};
    std::array<FfPidController, 3> ctrl;
    for (int a = 0; a < 3; ++a) ctrl[a].model = plants[a];
    PathSpec spec;
    spec.kind = PathKind::Circle;
    spec.amplitude_mm = 4.8;
    spec.frequency_hz = 3;
    const Path circle = make_path(spec);

    // Exact-model feedforward only, steady state after one second.
    auto ff = ctrl;
    for (auto& c : ff) c.kp = c.ki = c.kd = 0;
    const SimTrace tf = simulate_tracking(plants, ff, circle, 1.5);
    double ss = 0;
    for (std::size_t k = 0; k < tf.t.size(); ++k)
        if (tf.t[k] >= 1.0)
            for (int a = 0; a < 2; ++a) ss = std::max(ss, 1000.0 * std::abs(tf.ref[a][k] - tf.pos[a][k]));

    bool stable = true;
    double rho = 0;
    for (int a = 0; a < 3; ++a) {
        const PoleReport p = closed_loop_poles(plants[a], ctrl[a]);
        stable = stable && p.stable;
        rho = std::max(rho, p.spectral_radius);
    }
    FfPidController literal = ctrl[0];
    literal.integral_form = IntegralForm::AsPrinted;
    const double rho_literal = closed_loop_poles(plants[0], literal).spectral_radius;

    // Feedback alone so the comparison measures the loop, not the inversion.
    auto fb = ctrl, fb2 = ctrl;
    for (auto& c : fb) c.feedforward = false;
    for (auto& c : fb2) {
        c.feedforward = false;
        c.sample_time /= 2;
    }
    const SimTrace a = simulate_tracking(plants, fb, circle, 1.0);
    const SimTrace b = simulate_tracking(plants, fb2, circle, 1.0);
    double dr = 0;
    for (int ax = 0; ax < 2; ++ax) dr = std::max(dr, rel(b.metrics[ax].rmse_um, a.metrics[ax].rmse_um));

    const double c1 = coupling_rate({0.0283, -0.0246}, 10), c2 = coupling_rate({0.0139, -0.0037}, 10),
                 c3 = coupling_rate({0.0190, -0.0214}, 10);
    const bool coupling = std::abs(c1 - 0.53) < 0.005 && std::abs(c2 - 0.18) < 0.005 && std::abs(c3 - 0.40) < 0.005;

    report(7, ss < 0.1 && stable && dr < 0.01 && coupling,
           fmt("feedforward steady-state error %.4f um; loop stable %s (spectral radius %.5f, literal 1/k_i sum %.4f); "
               "Ts halving RMSE change %.3f%%; coupling %.2f/%.2f/%.2f%%",
               ss, stable ? "yes" : "no", rho, rho_literal, 100 * dr, c1, c2, c3));
}

void criterion8() {
    SweepGrid g{{0.30e-3, 0.35e-3, 0.40e-3}, {20e-3, 30e-3, 40e-3}, {6e-3, 9e-3, 12e-3}};
    const McpfParams base = mm(0.40, 30.5, 12, 0.644527602, -0.571885021);
    const SweepFlags f = sweep_monotonicity(parameter_sweep(g, base, kAl), g);
    report(8, f.k_increasing_in_t && f.k_decreasing_in_l && f.eta_increasing_in_b,
           fmt("k up in t %s, k down in l %s, eta up in b %s", f.k_increasing_in_t ? "yes" : "no",
               f.k_decreasing_in_l ? "yes" : "no", f.eta_increasing_in_b ? "yes" : "no"));
}

}  // namespace

int main() {
    void (*checks[])() = {criterion1, criterion2, criterion3, criterion4,
                          criterion5, criterion6, criterion7, criterion8};
    for (int i = 0; i < 8; ++i) {
        try {
            checks[i]();
        } catch (const std::exception& e) {
            report(i + 1, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
