#pragma once

#include "flexstage/kinetostatics.hpp"
#include "flexstage/mcpf.hpp"
#include "flexstage/stage.hpp"

namespace flexstage {

enum class Axis { XY, Z };

// Table-level targets for one axis.
struct CalibrationTarget {
    double k_axis = 0;
    double eta_decoupler = 0;
    double eta_guider = 0;
};

struct CalibrationResult {
    double span_decoupler = 0;  // m
    double span_guider = 0;     // m
    double load_offset_ratio = 0;
    double k_axis = 0;
    double eta_decoupler = 0;
    double eta_guider = 0;
    int iterations = 0;
};

// Composed axis stiffness of one decoupler/guider family pair.
double composed_axis_stiffness(Axis axis, const McpfParams& decoupler, const McpfParams& guider, const Material& m);

// Fits each family's rigid_link_span to its eta target and one shared
// load_offset_ratio to the composed axis stiffness. Thickness, length and
// width of the inputs are kept.
CalibrationResult calibrate_axis(Axis axis, McpfParams decoupler, McpfParams guider, const Material& m,
                                 const CalibrationTarget& target, double span_lo = 5e-5, double span_hi = 5e-3,
                                 double ratio_lo = -1.0, double ratio_hi = 0.5);

}  // namespace flexstage
