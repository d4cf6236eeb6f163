#include <cmath>
#include <numbers>
#include <random>

#include <catch_amalgamated.hpp>

#include "flexstage/errors.hpp"
#include "flexstage/motion.hpp"
#include "support.hpp"

using namespace flexstage;
using Catch::Approx;
using testing::rel;

namespace {

constexpr double kPi = std::numbers::pi;

Plant2 gx() { return plant_from_tf(2295, 92.96, 17060); }
Plant2 gy() { return plant_from_tf(2280, 94.36, 17140); }
Plant2 gz() { return plant_from_tf(2570, 110.9, 19760); }

FfPidController controller(const Plant2& model) {
    FfPidController c;
    c.model = model;
    return c;
}

std::array<FfPidController, 3> controllers(const std::array<Plant2, 3>& models) {
    return {controller(models[0]), controller(models[1]), controller(models[2])};
}

Path circle(const std::string& plane = "xy") {
    PathSpec s;
    s.kind = PathKind::Circle;
    s.plane = plane;
    return make_path(s);
}

// Metrics over [t0, end] of one axis, in micrometres.
ErrorMetrics tail_metrics(const SimTrace& tr, int axis, double t0) {
    std::vector<double> e;
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        if (tr.t[k] >= t0) e.push_back(1000.0 * (tr.ref[axis][k] - tr.pos[axis][k]));
    return error_metrics(e);
}

}  // namespace

TEST_CASE("plant examples") {
    CHECK(gx().natural_frequency_hz() == Approx(20.79).margin(0.005));
    CHECK(gx().dc_compliance_mm_per_n() == Approx(0.13452).margin(1e-5));
    const double k_static = 1000.0 / gx().dc_compliance_mm_per_n();
    CHECK(k_static == Approx(7434).margin(1));
    CHECK(rel(k_static, 7339) < 0.015);
    CHECK(plant_from_axis(1, 0, 4 * kPi * kPi).natural_frequency_hz() == Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(plant_from_axis(0, 1, 1), DomainError);
    CHECK_THROWS_AS(plant_from_tf(1, -1, 1), DomainError);
}

TEST_CASE("plant forms round trip") {
    Plant2 p = plant_from_axis(0.412, 38.3, 8787.9);
    Plant2 q = plant_from_tf(p.gain(), p.a1(), p.a0());
    CHECK(rel(q.mass, p.mass) < 1e-15);
    CHECK(rel(q.damping, p.damping) < 1e-14);
    CHECK(rel(q.stiffness, p.stiffness) < 1e-14);
    Plant2 r = gy();
    CHECK(rel(r.gain(), 2280) < 1e-14);
    CHECK(rel(r.a1(), 94.36) < 1e-14);
    CHECK(rel(r.a0(), 17140) < 1e-14);
}

TEST_CASE("analytic Bode limits") {
    Plant2 p = gx();
    auto lo = frequency_response(p, {1e-4});
    CHECK(std::abs(lo[0].phase_deg) < 1e-3);
    CHECK(lo[0].mag_db == Approx(20 * std::log10(p.dc_compliance_mm_per_n())).margin(1e-6));
    auto at = frequency_response(p, {p.natural_frequency_hz()});
    CHECK(at[0].phase_deg == Approx(-90).margin(1e-9));
    CHECK_THROWS_AS(frequency_response(p, {0.0}), DomainError);
}

TEST_CASE("swept-sine response reproduces the analytic curve") {
    const Plant2 p = gx();
    const std::vector<double> f = log_frequencies(0.5, 50, 25);
    const auto sim = swept_sine_response(p, SweptSineSpec{}, f);
    const auto ref = frequency_response(p, f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        INFO("f = " << f[i]);
        CHECK(std::abs(sim[i].mag_db - ref[i].mag_db) < 0.5);
        CHECK(std::abs(sim[i].phase_deg - ref[i].phase_deg) < 3.0);
    }
}

TEST_CASE("second-order fit recovers exact data") {
    const auto data = frequency_response(gy(), log_frequencies(1, 100, 40));
    FitResult r = fit_second_order(data);
    CHECK(rel(r.gain, 2280) < 1e-6);
    CHECK(rel(r.a1, 94.36) < 1e-6);
    CHECK(rel(r.a0, 17140) < 1e-6);
    CHECK(r.spans_resonance);

    // Refitting the fit's own response is a fixed point.
    FitResult again = fit_second_order(frequency_response(r.plant, log_frequencies(1, 100, 40)));
    CHECK(rel(again.a1, r.a1) < 1e-6);
}

TEST_CASE("second-order fit tolerates one percent noise") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0, 0.01);
    auto data = frequency_response(gy(), log_frequencies(1, 100, 60));
    for (auto& b : data) b.mag_db += 20 * std::log10(1 + n(rng));
    FitResult r = fit_second_order(data);
    CHECK(rel(r.gain, 2280) < 0.05);
    CHECK(rel(r.a1, 94.36) < 0.05);
    CHECK(rel(r.a0, 17140) < 0.05);
}

TEST_CASE("fit rejects degenerate data") {
    std::vector<BodePoint> one(12, frequency_response(gy(), {20.0})[0]);
    CHECK_THROWS_AS(fit_second_order(one), NumericalError);
    CHECK_THROWS_AS(fit_second_order(frequency_response(gy(), log_frequencies(1, 100, 6))), DomainError);
    FitResult below = fit_second_order(frequency_response(gy(), log_frequencies(0.1, 2, 20)));
    CHECK_FALSE(below.spans_resonance);
}

TEST_CASE("crown path samples") {
    PathSpec s;
    s.kind = PathKind::Crown;
    Path p = make_path(s);
    PathSample a = p.sample(0);
    CHECK(a[0].r == Approx(0).margin(1e-15));
    CHECK(a[1].r == Approx(5));
    CHECK(a[2].r == Approx(0).margin(1e-15));
    PathSample b = p.sample(1.0 / 24);
    CHECK(b[0].r == Approx(1.294).margin(5e-4));
    CHECK(b[1].r == Approx(4.830).margin(5e-4));
    CHECK(b[2].r == Approx(2.5).margin(1e-12));
}

TEST_CASE("circle amplitude, frequency and derivatives") {
    Path p = circle();
    CHECK(p.period_s == Approx(1.0 / 3));
    double peak = 0;
    for (int k = 0; k < 1000; ++k) peak = std::max(peak, std::abs(p.sample(k * 1e-3 / 3)[0].r));
    CHECK(peak == Approx(4.8).epsilon(1e-6));
    const double t = 0.137, h = 1e-6;
    CHECK(p.sample(t)[1].rd == Approx((p.sample(t + h)[1].r - p.sample(t - h)[1].r) / (2 * h)).epsilon(1e-6));
    CHECK(p.sample(t)[0].rdd == Approx((p.sample(t + h)[0].rd - p.sample(t - h)[0].rd) / (2 * h)).epsilon(1e-5));
    CHECK(p.sample(t + p.period_s)[0].r == Approx(p.sample(t)[0].r).margin(1e-12));
    PathSpec bad;
    bad.plane = "xw";
    CHECK_THROWS_AS(make_path(bad), DomainError);
}

TEST_CASE("zero reference gives an identically zero trace") {
    PathSpec s;
    s.kind = PathKind::Custom;
    s.frequency_hz = 1;
    s.custom = [](double) { return PathSample{}; };
    SimTrace tr = simulate_tracking({gx(), gy(), gz()}, controllers({gx(), gy(), gz()}), make_path(s), 1.5);
    for (int a = 0; a < 3; ++a)
        for (std::size_t k = 0; k < tr.t.size(); ++k) {
            REQUIRE(tr.pos[a][k] == 0.0);
            REQUIRE(tr.force[a][k] == 0.0);
        }
}

TEST_CASE("feedforward alone inverts an exactly known plant") {
    auto ctrl = controllers({gx(), gy(), gz()});
    for (auto& c : ctrl) c.kp = c.ki = c.kd = 0;
    SimTrace tr = simulate_tracking({gx(), gy(), gz()}, ctrl, circle(), 1.5);
    CHECK(tail_metrics(tr, 0, 1.0).maxe_um < 0.1);
    CHECK(tail_metrics(tr, 1, 1.0).maxe_um < 0.1);
}

TEST_CASE("open-loop step matches the continuous solution") {
    // Feedforward on a model twice as stiff turns a constant reference R into
    // a step of size R from rest at R.
    const Plant2 p = gx();
    const double R = 0.5;
    FfPidController c = controller(plant_from_axis(p.mass, p.damping, 2 * p.stiffness));
    c.kp = c.ki = c.kd = 0;
    FfPidController off = controller(p);
    off.kp = off.ki = off.kd = 0;
    off.feedforward = false;
    PathSpec s;
    s.kind = PathKind::Custom;
    s.custom = [R](double) {
        PathSample r{};
        r[0].r = R;
        return r;
    };
    SimTrace tr = simulate_tracking({p, gy(), gz()}, {c, off, off}, make_path(s), 0.4);
    const double wn = std::sqrt(p.a0()), zeta = p.a1() / (2 * wn), wd = wn * std::sqrt(1 - zeta * zeta);
    double worst = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const double t = tr.t[k];
        const double x = 2 * R - R * std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta * wn / wd * std::sin(wd * t));
        worst = std::max(worst, std::abs(tr.pos[0][k] - x));
    }
    CHECK(worst / R < 1e-3);
}

TEST_CASE("halving the sample time barely moves the tracking error") {
    const std::array<Plant2, 3> plants{gx(), gy(), gz()};
    auto c1 = controllers(plants), c2 = controllers(plants);
    for (auto& c : c2) c.sample_time /= 2;
    for (auto& c : c1) c.feedforward = false;
    for (auto& c : c2) c.feedforward = false;
    const SimTrace a = simulate_tracking(plants, c1, circle(), 1.0);
    const SimTrace b = simulate_tracking(plants, c2, circle(), 1.0);
    for (int ax = 0; ax < 2; ++ax) {
        INFO("axis " << ax << ": " << a.metrics[ax].rmse_um << " vs " << b.metrics[ax].rmse_um);
        CHECK(rel(b.metrics[ax].rmse_um, a.metrics[ax].rmse_um) < 0.01);
    }
}

TEST_CASE("feedforward never hurts for plants near the model") {
    const std::array<Plant2, 3> nominal{gx(), gy(), gz()};
    for (double sm : {0.8, 1.0, 1.2})
        for (double sk : {0.8, 1.0, 1.2}) {
            std::array<Plant2, 3> real = nominal;
            for (auto& p : real) p = plant_from_axis(p.mass * sm, p.damping, p.stiffness * sk);
            auto with = controllers(nominal), without = controllers(nominal);
            for (auto& c : without) c.feedforward = false;
            const SimTrace a = simulate_tracking(real, with, circle(), 1.0);
            const SimTrace b = simulate_tracking(real, without, circle(), 1.0);
            for (int ax = 0; ax < 2; ++ax) {
                INFO("mass x" << sm << " stiffness x" << sk << " axis " << ax);
                CHECK(a.metrics[ax].rmse_um <= b.metrics[ax].rmse_um);
            }
        }
}

TEST_CASE("integral form as printed is unstable and aborts") {
    FfPidController c = controller(gx());
    c.integral_form = IntegralForm::AsPrinted;
    PoleReport r = closed_loop_poles(gx(), c);
    CHECK_FALSE(r.stable);
    CHECK(r.spectral_radius > 1);
    CHECK(closed_loop_poles(gx(), controller(gx())).stable);
    auto ctrl = controllers({gx(), gy(), gz()});
    ctrl[0] = c;
    CHECK_THROWS_AS(simulate_tracking({gx(), gy(), gz()}, ctrl, circle(), 1.0), NumericalError);
}

TEST_CASE("error metric identities") {
    ErrorMetrics c = error_metrics(std::vector<double>(100, -2.0));
    CHECK(c.maxe_um == 2.0);
    CHECK(c.rmse_um == Approx(2.0).epsilon(1e-15));
    std::vector<double> s(10000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 3 * std::sin(2 * kPi * i / 1000.0);
    ErrorMetrics m = error_metrics(s);
    CHECK(m.rmse_um == Approx(m.maxe_um / std::sqrt(2)).epsilon(1e-6));
    CHECK_THROWS_AS(error_metrics({}), DomainError);
    CHECK_THROWS_AS(StreamingErrorMetrics{}.result(), DomainError);
}

TEST_CASE("streaming metrics equal the batch pass") {
    SimTrace tr = simulate_tracking({gx(), gy(), gz()}, controllers({gx(), gy(), gz()}), circle("yz"), 0.8);
    for (int a = 0; a < 3; ++a) {
        StreamingErrorMetrics s;
        for (std::size_t k = tr.window_start; k < tr.t.size(); ++k) s.add(1000.0 * (tr.ref[a][k] - tr.pos[a][k]));
        CHECK(s.result().maxe_um == tr.metrics[a].maxe_um);
        CHECK(s.result().rmse_um == tr.metrics[a].rmse_um);
    }
}

TEST_CASE("duration shorter than a period leaves no metrics window") {
    CHECK_THROWS_AS(simulate_tracking({gx(), gy(), gz()}, controllers({gx(), gy(), gz()}), circle(), 0.2), DomainError);
}

TEST_CASE("coupling rate examples") {
    CHECK(coupling_rate({0.0283, 0.0, -0.0246}, 10) == Approx(0.529).margin(1e-9));
    CHECK(coupling_rate({0.0139, -0.0037}, 10) == Approx(0.176).margin(1e-9));
    CHECK(coupling_rate(std::vector<double>(5, 0.0), 10) == 0.0);
    CHECK_THROWS_AS(coupling_rate({1.0}, 0), DomainError);
}

TEST_CASE("discrepancy examples") {
    Discrepancy d = discrepancy_analysis(8832.7, 7339, 25.4);
    CHECK(d.alpha == Approx(0.831).margin(5e-4));
    CHECK(100 * d.thickness_error == Approx(-6.0).margin(0.05));
    CHECK(d.corrected_frequency_hz == Approx(23.15).margin(0.01));
    Discrepancy one = discrepancy_analysis(5, 5, 20);
    CHECK(one.thickness_error == 0.0);
    CHECK(one.corrected_frequency_hz == 20.0);
    CHECK_THROWS_AS(discrepancy_analysis(0, 1, 1), DomainError);
}

TEST_CASE("model coupling follows the port leakage") {
    StiffnessReport r;
    r.k_motional = 100;
    r.k_lateral = 10000;
    std::map<std::string, StiffnessReport> reports{{"xg", r}, {"xd", r}, {"zg", r}, {"zd", r}};
    ChainModel c = build_chain_model(reports, {0.2, 0.1, 0.1, 0.3, 0.05}, ChainKind::XY);
    auto s = model_coupling_series(c, {-5, 0, 5});
    CHECK(s[2] == Approx(5 * port_leakage(c)));
    CHECK(s[0] == Approx(-s[2]));
}

TEST_CASE("csv headers") {
    CHECK(bode_csv({}) == "f_hz,mag_db,phase_deg\n");
    SimTrace tr;
    CHECK(trace_csv(tr) == "t_s,x_ref_mm,x_mm,y_ref_mm,y_mm,z_ref_mm,z_mm,Fx_N,Fy_N,Fz_N\n");
}
