#pragma once

#include <array>
#include <map>
#include <string>

#include "config.hpp"
#include "flexstage/mcpf.hpp"

namespace flexbench {

struct AxisSummary {
    double k_xy = 0;
    double k_z = 0;
    std::array<double, 3> f_hz{};  // x, y, z from the lumped diagonal model
};

struct FeCheck {
    std::array<double, 2> k_castigliano{};  // full unit: motional, lateral
    std::array<double, 2> k_fe{};
    std::array<double, 2> rel_error{};
    std::array<double, 2> reaction_rel_error{};  // max abs difference over max abs reaction
};

std::string fmt(const char* spec, double v);
std::map<std::string, flexstage::StiffnessReport> family_reports(const WorkbenchConfig& c);
AxisSummary axis_summary(const WorkbenchConfig& c, const std::map<std::string, flexstage::StiffnessReport>& r);
FeCheck fe_check(const flexstage::McpfParams& p, const flexstage::Material& m, int elements_per_segment = 8);

}  // namespace flexbench
