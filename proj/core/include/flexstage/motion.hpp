#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "flexstage/stage.hpp"

namespace flexstage {

// Second-order axis plant. Physical form in SI; rational form
// gain / (s^2 + a1 s + a0) in mm/N.
struct Plant2 {
    double mass = 1;
    double damping = 0;
    double stiffness = 1;

    double gain() const { return 1000.0 / mass; }
    double a1() const { return damping / mass; }
    double a0() const { return stiffness / mass; }
    double natural_frequency_hz() const;
    double dc_compliance_mm_per_n() const { return gain() / a0(); }
};

Plant2 plant_from_axis(double m, double c, double k);
Plant2 plant_from_tf(double gain, double a1, double a0);

struct BodePoint {
    double f_hz = 0;
    double mag_db = 0;  // 20 log10 |G| with G in mm/N
    double phase_deg = 0;
};

std::complex<double> plant_response(const Plant2& p, double f_hz);
std::vector<BodePoint> frequency_response(const Plant2& p, const std::vector<double>& f_hz);
std::vector<double> log_frequencies(double f0, double f1, int n);
std::string bode_csv(const std::vector<BodePoint>& pts);

struct SweptSineSpec {
    double amplitude_n = 5.0;
    double f_start = 0.1;
    double f_end = 100.0;
    double duration_s = 60.0;
    double tail_s = 2.0;  // zero-force ring-down appended to the record
    double sample_time = 5e-5;
};

// Linear chirp through the ZOH-discretized plant, then the ratio of output
// and input Fourier sums at each requested frequency.
std::vector<BodePoint> swept_sine_response(const Plant2& p, const SweptSineSpec& s, const std::vector<double>& f_hz);

struct FitResult {
    Plant2 plant;
    double gain = 0, a1 = 0, a0 = 0;
    double condition_number = 0;
    double relative_residual = 0;
    bool spans_resonance = false;
    bool ill_conditioned = false;
};

// Least squares on the rational form with Sanathanan-Koerner reweighting.
FitResult fit_second_order(const std::vector<BodePoint>& data);

struct AxisRef {
    double r = 0;    // mm
    double rd = 0;   // mm/s
    double rdd = 0;  // mm/s^2
};

using PathSample = std::array<AxisRef, 3>;

enum class PathKind { Circle, Crown, RasterScan, Custom };

struct PathSpec {
    PathKind kind = PathKind::Circle;
    double amplitude_mm = 4.8;  // circle radius; raster half-width
    double frequency_hz = 3.0;  // circle; raster fast axis
    std::string plane = "xy";   // circle plane: xy, yz, xz
    double duration_s = 0;      // 0: two reference periods
    std::function<PathSample(double)> custom;
};

struct Path {
    std::function<PathSample(double)> sample;
    double period_s = 0;
    double duration_s = 0;
    std::array<bool, 3> active{};
    std::string name;
};

Path make_path(const PathSpec& spec);

enum class IntegralForm { SampledIntegral, AsPrinted };
enum class FeedforwardHold { FirstOrder, ZeroOrder };

// Discrete feedforward + PID with error in mm and force in N:
//   F = m r'' + c r' + k r + kp e + g_i sum (e_i + e_{i-1})/2 + kd (e_k - e_{k-1}) / (Ts + kd / (Nf kp))
// with g_i = Ts/ki (SampledIntegral) or 1/ki (AsPrinted). ki = 0 disables the integral.
struct FfPidController {
    double kp = 150;
    double ki = 0.0005;
    double kd = 0.0005;
    double sample_time = 5e-5;
    double filter_n = 50;
    bool feedforward = true;
    Plant2 model;
    IntegralForm integral_form = IntegralForm::SampledIntegral;
    FeedforwardHold hold = FeedforwardHold::FirstOrder;

    void validate() const;
    double integral_gain() const;
    double derivative_gain() const;  // multiplies (e_k - e_{k-1})
};

struct PoleReport {
    std::vector<std::complex<double>> poles;
    double spectral_radius = 0;
    bool stable = false;
};

PoleReport closed_loop_poles(const Plant2& plant, const FfPidController& c);

struct ErrorMetrics {
    double maxe_um = 0;
    double rmse_um = 0;
};

struct SimTrace {
    std::vector<double> t;
    std::array<std::vector<double>, 3> ref;  // mm
    std::array<std::vector<double>, 3> pos;  // mm
    std::array<std::vector<double>, 3> force;  // N
    std::array<bool, 3> active{};
    std::size_t window_start = 0;  // first sample of the metrics window
    std::array<ErrorMetrics, 3> metrics;
    std::string path_name;
};

// Plants start at rest on r(0). The first reference period is excluded from metrics.
SimTrace simulate_tracking(const std::array<Plant2, 3>& plants, const std::array<FfPidController, 3>& ctrl,
                           const Path& path, double duration_s = 0);

ErrorMetrics metrics(const SimTrace& tr, int axis);
ErrorMetrics error_metrics(const std::vector<double>& err_um);

// Single-pass accumulator; produces the same values as error_metrics.
class StreamingErrorMetrics {
public:
    void add(double err_um);
    ErrorMetrics result() const;
    std::size_t count() const { return n_; }

private:
    std::size_t n_ = 0;
    double max_ = 0;
    double sumsq_ = 0;
};

std::string trace_csv(const SimTrace& tr);

// Peak-to-peak of the passive-axis series over the scan range, in percent.
// Both arguments in the same length unit.
double coupling_rate(const std::vector<double>& series, double range);

// Passive displacement produced through the chain's port spring by the active-axis motion.
std::vector<double> model_coupling_series(const ChainModel& chain, const std::vector<double>& active);

struct Discrepancy {
    double alpha = 1;
    double thickness_error = 0;  // fraction
    double corrected_frequency_hz = 0;
};

Discrepancy discrepancy_analysis(double k_nominal, double k_actual, double f_nominal_hz);

}  // namespace flexstage
