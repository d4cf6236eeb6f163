#pragma once

#include <cmath>

#include "flexstage/mcpf.hpp"

namespace testing {

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Calibrated family geometry, lengths in mm.
inline flexstage::McpfParams family(double t, double l, double b, double span, double ratio) {
    flexstage::McpfParams p;
    p.thickness = t * 1e-3;
    p.length = l * 1e-3;
    p.width = b * 1e-3;
    p.rigid_link_span = span * 1e-3;
    p.load_offset_ratio = ratio;
    return p;
}

inline flexstage::McpfParams xd() { return family(0.40, 30.5, 12, 0.644527602, -0.571885021); }
inline flexstage::McpfParams xg() { return family(0.32, 23.0, 8, 0.460809567, -0.571885021); }
inline flexstage::McpfParams zd() { return family(0.34, 22.4, 6, 0.167902314, 0.222110643); }
inline flexstage::McpfParams zg() { return family(0.40, 41.7, 6, 0.829831574, 0.222110643); }

}  // namespace testing
