#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flexstage/calibration.hpp"
#include "flexstage/kinetostatics.hpp"

namespace flexstage {

// Fixed per-family geometry that the optimizer does not vary.
struct FamilyGeometry {
    double width_mm = 0;
    double span_mm = 0;  // 0 selects l/10
    double load_offset_ratio = 0;
    int layer_count = 3;

    McpfParams params(double t_mm, double l_mm) const;
};

// Variables in order [t_g, l_g, t_d, l_d], all mm.
using DesignVector = std::array<double, 4>;

struct OptProblem {
    Axis axis = Axis::XY;
    DesignVector lower{};
    DesignVector upper{};
    FamilyGeometry guider;
    FamilyGeometry decoupler;
    Material material;
    double max_force_n = 50.0;
    double stroke_mm = 5.5;
    double eta_decoupler_min = 60;
    double eta_guider_min = 60;
    double min_thickness_mm = 0.3;

    double stiffness_ceiling() const { return max_force_n / (stroke_mm * 1e-3); }
    void validate() const;
};

struct Individual {
    DesignVector par{};
    std::array<double, 3> objectives{};  // k_axis (N/m), eta_d, eta_g
    // Normalized violations (<= 0 satisfied): stiffness ceiling, eta_d, eta_g, thickness.
    std::array<double, 4> violations{};
    bool feasible = false;
    bool clamped = false;
    std::string diagnostics;

    double total_violation() const;
};

Individual evaluate(const OptProblem& p, DesignVector par);

struct GaSettings {
    int population = 200;
    int generations = 100;
    double mutation_probability = 0.3;
    double crossover_probability = 0.9;
    double eta_crossover = 15;
    double eta_mutation = 20;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ViolationStats {
    double min_total = 0;
    double mean_total = 0;
    std::array<double, 4> violated_fraction{};
};

struct ParetoFront {
    std::vector<Individual> members;
    long evaluations = 0;
    ViolationStats final_population;  // filled in every run, informative when empty
};

// Pareto dominance, all objectives maximized.
bool dominates(const std::array<double, 3>& a, const std::array<double, 3>& b);
// Feasibility first, then total violation, then Pareto dominance.
bool constrained_dominates(const Individual& a, const Individual& b);
std::vector<int> nondominated_indices(const std::vector<std::array<double, 3>>& objs);

ParetoFront optimize(const OptProblem& p, const GaSettings& s);

struct SelectionPolicy {
    double slack = 0.10;  // eta margin above thresholds
};

struct Selection {
    DesignVector par{};
    Individual evaluated;
    bool slack_satisfied = false;
};

DesignVector round_for_machining(const DesignVector& par);
Selection select_design(const OptProblem& p, const ParetoFront& front, const SelectionPolicy& policy = {});

std::string front_csv(const ParetoFront& f);

}  // namespace flexstage
