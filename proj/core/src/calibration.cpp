#include "flexstage/calibration.hpp"

#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>

#include "flexstage/errors.hpp"

namespace flexstage {

double composed_axis_stiffness(Axis axis, const McpfParams& d, const McpfParams& g, const Material& m) {
    const double kd = motional_stiffness(d, m);
    const double kg = motional_stiffness(g, m);
    return axis == Axis::XY ? axis_stiffness_xy(kd, kg) : axis_stiffness_z(kg, kd);
}

namespace {

template <class F>
double solve_bracketed(F f, double lo, double hi, const char* what) {
    const double flo = f(lo), fhi = f(hi);
    if (!(flo * fhi < 0))
        throw NumericalError(std::string("calibration target not bracketed for ") + what);
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(48);
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

CalibrationResult calibrate_axis(Axis axis, McpfParams d, McpfParams g, const Material& m,
                                 const CalibrationTarget& t, double span_lo, double span_hi, double ratio_lo,
                                 double ratio_hi) {
    if (!(t.k_axis > 0) || !(t.eta_decoupler > 0) || !(t.eta_guider > 0))
        throw DomainError("calibration targets must be positive");
    auto eta_gap = [&](McpfParams p, double target) {
        return [p, target, &m](double span) mutable {
            p.rigid_link_span = span;
            return stiffness_ratio(p, m) - target;
        };
    };
    CalibrationResult r;
    double prev_ratio = INFINITY;
    for (int it = 0; it < 20; ++it) {
        d.rigid_link_span = solve_bracketed(eta_gap(d, t.eta_decoupler), span_lo, span_hi, "decoupler eta");
        g.rigid_link_span = solve_bracketed(eta_gap(g, t.eta_guider), span_lo, span_hi, "guider eta");
        auto k_gap = [&](double ratio) {
            McpfParams dd = d, gg = g;
            dd.load_offset_ratio = gg.load_offset_ratio = ratio;
            return composed_axis_stiffness(axis, dd, gg, m) - t.k_axis;
        };
        const double ratio = solve_bracketed(k_gap, ratio_lo, ratio_hi, "axis stiffness");
        d.load_offset_ratio = g.load_offset_ratio = ratio;
        r.iterations = it + 1;
        if (std::abs(ratio - prev_ratio) < 1e-10) break;
        prev_ratio = ratio;
    }
    r.span_decoupler = d.rigid_link_span;
    r.span_guider = g.rigid_link_span;
    r.load_offset_ratio = d.load_offset_ratio;
    r.k_axis = composed_axis_stiffness(axis, d, g, m);
    r.eta_decoupler = stiffness_ratio(d, m);
    r.eta_guider = stiffness_ratio(g, m);
    return r;
}

}  // namespace flexstage
