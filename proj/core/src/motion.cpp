#include "flexstage/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "flexstage/errors.hpp"

namespace flexstage {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double Plant2::natural_frequency_hz() const { return std::sqrt(a0()) / (2 * kPi); }

Plant2 plant_from_axis(double m, double c, double k) {
    if (!(m > 0) || !(c >= 0) || !(k > 0) || !std::isfinite(m + c + k))
        throw DomainError("plant needs m > 0, c >= 0, k > 0");
    return Plant2{m, c, k};
}

Plant2 plant_from_tf(double gain, double a1, double a0) {
    if (!(gain > 0) || !(a1 >= 0) || !(a0 > 0) || !std::isfinite(gain + a1 + a0))
        throw DomainError("transfer function needs gain > 0, a1 >= 0, a0 > 0");
    const double m = 1000.0 / gain;
    return Plant2{m, a1 * m, a0 * m};
}

cd plant_response(const Plant2& p, double f) {
    const double w = 2 * kPi * f;
    return p.gain() / cd(p.a0() - w * w, p.a1() * w);
}

std::vector<BodePoint> frequency_response(const Plant2& p, const std::vector<double>& f_hz) {
    std::vector<BodePoint> out;
    for (double f : f_hz) {
        if (!(f > 0)) throw DomainError("frequencies must be positive");
        const double w = 2 * kPi * f;
        const cd h = plant_response(p, f);
        // Continuous branch from 0 to -180 degrees.
        const double ph = -std::atan2(p.a1() * w, p.a0() - w * w) * 180.0 / kPi;
        out.push_back({f, 20.0 * std::log10(std::abs(h)), ph});
    }
    return out;
}

std::vector<double> log_frequencies(double f0, double f1, int n) {
    if (!(f0 > 0) || !(f1 > f0) || n < 2) throw DomainError("log_frequencies needs 0 < f0 < f1 and n >= 2");
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = f0 * std::pow(f1 / f0, double(i) / (n - 1));
    return f;
}

std::string bode_csv(const std::vector<BodePoint>& pts) {
    std::string out = "f_hz,mag_db,phase_deg\n";
    char buf[128];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", p.f_hz, p.mag_db, p.phase_deg);
        out += buf;
    }
    return out;
}

namespace {

struct Discrete2 {
    Eigen::Matrix2d phi;
    Eigen::Vector2d gamma0;  // held input
    Eigen::Vector2d gamma1;  // ramp increment over the step
};

// Exact discretization of x' = A x + B u for u held or ramped over one step.
Discrete2 discretize(const Plant2& p, double ts) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(0, 1) = 1;
    m(1, 0) = -p.stiffness / p.mass;
    m(1, 1) = -p.damping / p.mass;
    m(1, 2) = 1.0 / p.mass;
    m(2, 3) = 1.0 / ts;
    const Eigen::Matrix4d e = (m * ts).exp();
    Discrete2 d;
    d.phi = e.topLeftCorner<2, 2>();
    d.gamma0 = e.block<2, 1>(0, 2);
    d.gamma1 = e.block<2, 1>(0, 3);
    return d;
}

}  // namespace

std::vector<BodePoint> swept_sine_response(const Plant2& p, const SweptSineSpec& s, const std::vector<double>& f_hz) {
    if (!(s.sample_time > 0) || !(s.duration_s > 0) || !(s.f_end > s.f_start) || !(s.f_start > 0))
        throw DomainError("invalid swept-sine settings");
    const Discrete2 d = discretize(p, s.sample_time);
    const long n_chirp = std::lround(s.duration_s / s.sample_time);
    const long n = n_chirp + std::lround(s.tail_s / s.sample_time);
    const double rate = (s.f_end - s.f_start) / s.duration_s;

    const std::size_t nf = f_hz.size();
    std::vector<cd> uu(nf, 0.0), yy(nf, 0.0), rot(nf), ph(nf, 1.0);
    for (std::size_t i = 0; i < nf; ++i) rot[i] = std::polar(1.0, -2 * kPi * f_hz[i] * s.sample_time);

    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    for (long k = 0; k < n; ++k) {
        const double t = k * s.sample_time;
        const double u = k < n_chirp ? s.amplitude_n * std::sin(2 * kPi * (s.f_start * t + 0.5 * rate * t * t)) : 0.0;
        const double y = 1000.0 * x(0);
        if (k % 4096 == 0)
            for (std::size_t i = 0; i < nf; ++i) ph[i] = std::polar(1.0, -2 * kPi * f_hz[i] * t);
        for (std::size_t i = 0; i < nf; ++i) {
            uu[i] += u * ph[i];
            yy[i] += y * ph[i];
            ph[i] *= rot[i];
        }
        x = d.phi * x + d.gamma0 * u;
    }
    std::vector<BodePoint> out;
    for (std::size_t i = 0; i < nf; ++i) {
        const cd h = yy[i] / uu[i];
        out.push_back({f_hz[i], 20.0 * std::log10(std::abs(h)), std::arg(h) * 180.0 / kPi});
    }
    return out;
}

FitResult fit_second_order(const std::vector<BodePoint>& data) {
    std::set<double> distinct;
    for (const auto& b : data) distinct.insert(b.f_hz);
    if (distinct.size() < 3)
        throw NumericalError("ill-conditioned fit: need at least 3 distinct frequencies, got " +
                             std::to_string(distinct.size()));
    if (data.size() < 10) throw DomainError("fit_second_order needs at least 10 frequency points");

    const int n = static_cast<int>(data.size());
    std::vector<cd> h(n);
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        if (!(data[i].f_hz > 0)) throw DomainError("frequencies must be positive");
        h[i] = std::polar(std::pow(10.0, data[i].mag_db / 20.0), data[i].phase_deg * kPi / 180.0);
        w[i] = 2 * kPi * data[i].f_hz;
    }
    // Unknowns (a0, a1, gain): H a0 + j w H a1 - gain = w^2 H.
    Eigen::Vector3d theta = Eigen::Vector3d::Zero();
    std::vector<double> weight(n, 1.0);
    FitResult fr;
    for (int iter = 0; iter < 12; ++iter) {
        Eigen::MatrixXd a(2 * n, 3);
        Eigen::VectorXd b(2 * n);
        for (int i = 0; i < n; ++i) {
            const cd c0 = h[i], c1 = cd(0, w[i]) * h[i], rhs = w[i] * w[i] * h[i];
            a.row(2 * i) << c0.real(), c1.real(), -1.0;
            a.row(2 * i + 1) << c0.imag(), c1.imag(), 0.0;
            b(2 * i) = rhs.real();
            b(2 * i + 1) = rhs.imag();
            a.row(2 * i) *= weight[i];
            a.row(2 * i + 1) *= weight[i];
            b(2 * i) *= weight[i];
            b(2 * i + 1) *= weight[i];
        }
        const Eigen::Vector3d scale = a.colwise().norm().transpose().cwiseMax(1e-300);
        const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(as, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto sv = svd.singularValues();
        fr.condition_number = sv(2) > 0 ? sv(0) / sv(2) : INFINITY;
        const Eigen::Vector3d next = svd.solve(b).cwiseQuotient(scale);
        const bool converged = iter > 0 && (next - theta).norm() <= 1e-13 * next.norm();
        theta = next;
        if (converged) break;
        for (int i = 0; i < n; ++i) weight[i] = 1.0 / std::abs(cd(theta(0) - w[i] * w[i], theta(1) * w[i]));
    }
    fr.a0 = theta(0);
    fr.a1 = theta(1);
    fr.gain = theta(2);
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        const cd model = fr.gain / cd(fr.a0 - w[i] * w[i], fr.a1 * w[i]);
        num += std::norm(model - h[i]);
        den += std::norm(h[i]);
    }
    fr.relative_residual = std::sqrt(num / den);
    if (!(fr.a0 > 0) || !(fr.gain > 0) || !(fr.a1 >= 0)) {
        fr.ill_conditioned = true;
        throw NumericalError("ill-conditioned fit: non-physical parameters");
    }
    fr.plant = plant_from_tf(fr.gain, fr.a1, fr.a0);
    const double fn = fr.plant.natural_frequency_hz();
    fr.spans_resonance = fn >= *distinct.begin() && fn <= *distinct.rbegin();
    fr.ill_conditioned = !fr.spans_resonance || fr.condition_number > 1e8;
    return fr;
}

Path make_path(const PathSpec& s) {
    Path p;
    const double two_pi = 2 * kPi;
    switch (s.kind) {
        case PathKind::Circle: {
            int a = 0, b = 1;
            if (s.plane == "xy") a = 0, b = 1;
            else if (s.plane == "yz") a = 1, b = 2;
            else if (s.plane == "xz") a = 0, b = 2;
            else throw DomainError("circle plane must be xy, yz or xz");
            if (!(s.amplitude_mm > 0) || !(s.frequency_hz > 0)) throw DomainError("circle needs positive amplitude and frequency");
            const double amp = s.amplitude_mm, w = two_pi * s.frequency_hz;
            p.sample = [a, b, amp, w](double t) {
                PathSample r{};
                r[a] = {amp * std::sin(w * t), amp * w * std::cos(w * t), -amp * w * w * std::sin(w * t)};
                r[b] = {amp * std::cos(w * t), -amp * w * std::sin(w * t), -amp * w * w * std::cos(w * t)};
                return r;
            };
            p.period_s = 1.0 / s.frequency_hz;
            p.active[a] = p.active[b] = true;
            p.name = "circle-" + s.plane;
            break;
        }
        case PathKind::Crown: {
            p.sample = [two_pi](double t) {
                const double w = two_pi, wz = 6 * two_pi;
                PathSample r{};
                r[0] = {5 * std::sin(w * t), 5 * w * std::cos(w * t), -5 * w * w * std::sin(w * t)};
                r[1] = {5 * std::cos(w * t), -5 * w * std::sin(w * t), -5 * w * w * std::cos(w * t)};
                r[2] = {2.5 * std::sin(wz * t), 2.5 * wz * std::cos(wz * t), -2.5 * wz * wz * std::sin(wz * t)};
                return r;
            };
            p.period_s = 1.0;
            p.active = {true, true, true};
            p.name = "crown";
            break;
        }
        case PathKind::RasterScan: {
            if (!(s.amplitude_mm > 0) || !(s.frequency_hz > 0)) throw DomainError("raster needs positive amplitude and frequency");
            const double amp = s.amplitude_mm, w = two_pi * s.frequency_hz;
            const double dur = s.duration_s > 0 ? s.duration_s : 10.0 / s.frequency_hz;
            // Sinusoidal fast axis keeps the reference smooth at the turnarounds.
            p.sample = [amp, w, dur](double t) {
                PathSample r{};
                r[0] = {amp * std::sin(w * t), amp * w * std::cos(w * t), -amp * w * w * std::sin(w * t)};
                r[1] = {-amp + 2 * amp * std::min(t, dur) / dur, t < dur ? 2 * amp / dur : 0.0, 0.0};
                return r;
            };
            p.period_s = 1.0 / s.frequency_hz;
            p.duration_s = dur;
            p.active = {true, true, false};
            p.name = "raster";
            break;
        }
        case PathKind::Custom: {
            if (!s.custom) throw DomainError("custom path without a sampling function");
            p.sample = s.custom;
            p.period_s = s.frequency_hz > 0 ? 1.0 / s.frequency_hz : 0.0;
            p.active = {true, true, true};
            p.name = "custom";
            break;
        }
        default:
            throw DomainError("unsupported path kind");
    }
    if (s.duration_s > 0) p.duration_s = s.duration_s;
    if (!(p.duration_s > 0)) p.duration_s = 3 * p.period_s;
    return p;
}

void FfPidController::validate() const {
    if (!(sample_time > 0)) throw DomainError("sample time must be positive");
    if (!(filter_n > 0)) throw DomainError("filter coefficient must be positive");
    if (kp < 0 || ki < 0 || kd < 0) throw DomainError("controller gains must be non-negative");
    if (kd > 0 && !(kp > 0)) throw DomainError("derivative filter needs kp > 0");
    if (feedforward) plant_from_axis(model.mass, model.damping, model.stiffness);
}

double FfPidController::integral_gain() const {
    if (ki == 0) return 0.0;
    return integral_form == IntegralForm::SampledIntegral ? sample_time / ki : 1.0 / ki;
}

double FfPidController::derivative_gain() const {
    if (kd == 0) return 0.0;
    return kd / (sample_time + kd / (filter_n * kp));
}

PoleReport closed_loop_poles(const Plant2& plant, const FfPidController& c) {
    c.validate();
    const Discrete2 d = discretize(plant, c.sample_time);
    const double g = c.integral_gain(), dg = c.derivative_gain();
    // State [x (m), v, S_{k-1}, e_{k-1}], e = -1000 x in mm with zero reference.
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    Eigen::RowVector4d u;
    u << -1000.0 * (c.kp + g / 2 + dg), 0.0, g, g / 2 - dg;
    a.topLeftCorner<2, 2>() = d.phi;
    a.topRows<2>() += d.gamma0 * u;
    a.row(2) << -500.0, 0.0, 1.0, 0.5;
    a.row(3) << -1000.0, 0.0, 0.0, 0.0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(a, false);
    PoleReport r;
    for (int i = 0; i < 4; ++i) {
        r.poles.push_back(es.eigenvalues()(i));
        r.spectral_radius = std::max(r.spectral_radius, std::abs(es.eigenvalues()(i)));
    }
    r.stable = r.spectral_radius < 1.0;
    return r;
}

ErrorMetrics error_metrics(const std::vector<double>& e) {
    if (e.empty()) throw DomainError("empty metrics window");
    double mx = 0, ss = 0;
    for (double v : e) {
        mx = std::max(mx, std::abs(v));
        ss += v * v;
    }
    return {mx, std::sqrt(ss / e.size())};
}

void StreamingErrorMetrics::add(double e) {
    ++n_;
    max_ = std::max(max_, std::abs(e));
    sumsq_ += e * e;
}

ErrorMetrics StreamingErrorMetrics::result() const {
    if (n_ == 0) throw DomainError("empty metrics window");
    return {max_, std::sqrt(sumsq_ / n_)};
}

ErrorMetrics metrics(const SimTrace& tr, int axis) {
    std::vector<double> e;
    for (std::size_t k = tr.window_start; k < tr.t.size(); ++k)
        e.push_back(1000.0 * (tr.ref[axis][k] - tr.pos[axis][k]));
    return error_metrics(e);
}

SimTrace simulate_tracking(const std::array<Plant2, 3>& plants, const std::array<FfPidController, 3>& ctrl,
                           const Path& path, double duration_s) {
    const double ts = ctrl[0].sample_time;
    for (const auto& c : ctrl) {
        c.validate();
        if (c.sample_time != ts) throw DomainError("all axes must share one sample time");
    }
    const double dur = duration_s > 0 ? duration_s : path.duration_s;
    if (!(dur > 0)) throw DomainError("simulation duration must be positive");
    for (int a = 0; a < 3; ++a) {
        plant_from_axis(plants[a].mass, plants[a].damping, plants[a].stiffness);
        const auto& c = ctrl[a];
        if (c.kp == 0 && c.ki == 0 && c.kd == 0) continue;
        const PoleReport pr = closed_loop_poles(plants[a], c);
        if (!pr.stable) {
            std::ostringstream os;
            os << "unstable closed loop on axis " << "xyz"[a] << ": spectral radius " << pr.spectral_radius << ", poles";
            for (const auto& z : pr.poles) os << " (" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "j)";
            throw NumericalError(os.str());
        }
    }

    const long n = std::lround(dur / ts) + 1;
    SimTrace tr;
    tr.path_name = path.name;
    tr.active = path.active;
    tr.t.resize(n);
    for (int a = 0; a < 3; ++a) {
        tr.ref[a].resize(n);
        tr.pos[a].resize(n);
        tr.force[a].resize(n);
    }
    std::vector<PathSample> refs(n + 1);
    for (long k = 0; k <= n; ++k) refs[k] = path.sample(k * ts);
    for (long k = 0; k < n; ++k) tr.t[k] = k * ts;

    for (int a = 0; a < 3; ++a) {
        const auto& c = ctrl[a];
        const Discrete2 d = discretize(plants[a], ts);
        const double g = c.integral_gain(), dg = c.derivative_gain();
        auto ff = [&](long k) {
            if (!c.feedforward) return 0.0;
            const AxisRef& r = refs[k][a];
            return (c.model.mass * r.rdd + c.model.damping * r.rd + c.model.stiffness * r.r) / 1000.0;
        };
        Eigen::Vector2d x(refs[0][a].r / 1000.0, 0.0);
        double sum = 0, e_prev = 0;
        for (long k = 0; k < n; ++k) {
            const double y = 1000.0 * x(0);
            const double e = refs[k][a].r - y;
            sum += 0.5 * (e + e_prev);
            const double f_fb = c.kp * e + g * sum + dg * (e - e_prev);
            e_prev = e;
            const double f0 = ff(k);
            const double f = f_fb + f0;
            tr.ref[a][k] = refs[k][a].r;
            tr.pos[a][k] = y;
            tr.force[a][k] = f;
            x = d.phi * x + d.gamma0 * f;
            if (c.hold == FeedforwardHold::FirstOrder) x += d.gamma1 * (ff(k + 1) - f0);
            if (!std::isfinite(x(0)) || !std::isfinite(x(1)))
                throw NumericalError("non-finite state on axis " + std::string(1, "xyz"[a]) + " at step " +
                                     std::to_string(k));
        }
    }

    const double t0 = path.period_s;
    tr.window_start = static_cast<std::size_t>(std::ceil(t0 / ts - 1e-9));
    if (tr.window_start >= tr.t.size()) throw DomainError("empty metrics window: duration shorter than one period");
    for (int a = 0; a < 3; ++a) tr.metrics[a] = metrics(tr, a);
    return tr;
}

std::string trace_csv(const SimTrace& tr) {
    std::string out = "t_s,x_ref_mm,x_mm,y_ref_mm,y_mm,z_ref_mm,z_mm,Fx_N,Fy_N,Fz_N\n";
    out.reserve(out.size() + tr.t.size() * 120);
    char buf[320];
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.6f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", tr.t[k], tr.ref[0][k],
                      tr.pos[0][k], tr.ref[1][k], tr.pos[1][k], tr.ref[2][k], tr.pos[2][k], tr.force[0][k],
                      tr.force[1][k], tr.force[2][k]);
        out += buf;
    }
    return out;
}

double coupling_rate(const std::vector<double>& series, double range) {
    if (!(range > 0)) throw DomainError("scan range must be positive");
    if (series.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    return (*hi - *lo) / range * 100.0;
}

std::vector<double> model_coupling_series(const ChainModel& chain, const std::vector<double>& active) {
    const double g = port_leakage(chain);
    std::vector<double> out;
    out.reserve(active.size());
    for (double v : active) out.push_back(g * v);
    return out;
}

Discrepancy discrepancy_analysis(double k_nominal, double k_actual, double f_nominal) {
    if (!(k_nominal > 0) || !(k_actual > 0) || !(f_nominal > 0)) throw DomainError("discrepancy inputs must be positive");
    Discrepancy d;
    d.alpha = k_actual / k_nominal;
    d.thickness_error = std::cbrt(d.alpha) - 1.0;
    d.corrected_frequency_hz = std::sqrt(d.alpha) * f_nominal;
    return d;
}

}  // namespace flexstage
