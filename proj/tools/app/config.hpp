#pragma once

#include <array>
#include <map>
#include <string>

#include "flexstage/calibration.hpp"
#include "flexstage/motion.hpp"
#include "flexstage/optimizer.hpp"
#include "flexstage/stage.hpp"

namespace flexbench {

inline constexpr int kSchemaVersion = 1;

struct AxisBounds {
    flexstage::DesignVector lower{};
    flexstage::DesignVector upper{};
};

struct OptimizerConfig {
    double max_force_n = 50;
    double stroke_mm = 5.5;
    std::map<std::string, double> eta_min{{"xd", 60}, {"xg", 60}, {"zd", 100}, {"zg", 20}};
    double min_thickness_mm = 0.3;
    AxisBounds xy{{0.3, 20, 0.3, 30}, {0.4, 30, 0.4, 40}};
    AxisBounds z{{0.3, 40, 0.3, 20}, {0.4, 50, 0.4, 30}};
    flexstage::GaSettings ga;
    double selection_slack = 0.10;
};

enum class FeedforwardSource { Plant, Stage, None };

struct SimulationConfig {
    double sample_time_s = 5e-5;
    std::array<double, 3> gain{2295, 2280, 2570};  // mm s^-2 / N
    std::array<double, 3> a1{92.96, 94.36, 110.9};
    std::array<double, 3> a0{17060, 17140, 19760};
    double kp = 150;
    double ki = 0.0005;
    double kd = 0.0005;
    double filter_n = 50;
    flexstage::IntegralForm integral_form = flexstage::IntegralForm::SampledIntegral;
    flexstage::FeedforwardHold hold = flexstage::FeedforwardHold::FirstOrder;
    FeedforwardSource feedforward = FeedforwardSource::Plant;
    double circle_diameter_mm = 9.6;
    double circle_frequency_hz = 3.0;
    double raster_width_mm = 10.0;
    double raster_frequency_hz = 1.0;
    double raster_duration_s = 10.0;
    double duration_periods = 3.0;

    std::array<flexstage::Plant2, 3> plants() const;
};

struct DiscrepancyConfig {
    std::array<double, 3> k_nominal{8832.7, 8832.7, 8994.1};
    std::array<double, 3> k_actual{7339, 7299, 7677};
    std::array<double, 3> f_nominal_hz{25.4, 25.4, 28.0};
    // Measured passive-axis extrema during the planar scans, per axis.
    std::array<double, 3> coupling_max_um{28.3, 13.9, 19.0};
    std::array<double, 3> coupling_min_um{-24.6, -3.7, -21.4};
    double scan_range_mm = 10.0;
};

struct WorkbenchConfig {
    int schema_version = kSchemaVersion;
    flexstage::Material material;
    flexstage::StageConfig stage;
    OptimizerConfig optimizer;
    SimulationConfig simulation;
    DiscrepancyConfig discrepancy;
};

// Calibrated reference configuration.
WorkbenchConfig default_config();

// Strict parse: unknown keys and missing keys raise flexstage::ConfigError with the field path.
WorkbenchConfig parse_config(const std::string& json_text);
WorkbenchConfig load_config(const std::string& path);
std::string config_to_json(const WorkbenchConfig& c);

flexstage::OptProblem make_problem(const WorkbenchConfig& c, flexstage::Axis axis);
flexstage::FamilyGeometry family_geometry(const flexstage::McpfParams& p);

}  // namespace flexbench
