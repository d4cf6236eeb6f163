#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexstage/kinetostatics.hpp"
#include "flexstage/mcpf.hpp"

namespace flexstage {

// MCPF counts acting in parallel along each axis.
struct StageTopology {
    int xy_guider_pairs = 4;       // one x and one y guider per pair
    int xy_decoupler_blocks = 6;   // per axis
    int z_guiders = 8;
    int z_decouplers = 4;

    int xy_guiders_per_axis() const { return xy_guider_pairs; }
};

struct AxisStiffnessCoefficients {
    int decoupler = 0;
    int guider = 0;
};

AxisStiffnessCoefficients xy_coefficients(const StageTopology& t = {});
AxisStiffnessCoefficients z_coefficients(const StageTopology& t = {});

double axis_stiffness_xy(double k_xdm, double k_xgm);
double axis_stiffness_z(double k_zgm, double k_zdm);

struct StageConfig {
    std::map<std::string, McpfParams> families;  // xg, xd, zg, zd
    std::array<double, 3> masses{0.412, 0.412, 0.355};  // kg
    std::array<double, 3> damping{0, 0, 0};            // N s/m
    std::array<double, 5> chain_masses{0.22, 0.12, 0.072, 0.355, 0.05};
    double c5 = 1.0;
    double c8 = 1.0;

    void validate() const;
};

struct ModalResult {
    std::vector<double> frequencies_hz;  // ascending
    std::vector<int> order;              // DOF index dominating each mode
};

ModalResult natural_frequencies(const Eigen::Matrix3d& m, const Eigen::Matrix3d& k);
// Generalized symmetric eigen-solve |K - w^2 M| = 0.
ModalResult general_modes(const Eigen::MatrixXd& m, const Eigen::MatrixXd& k);

enum class ChainKind { XY, Z };

struct ChainModel {
    ChainKind kind = ChainKind::XY;
    std::array<double, 8> k{};  // k1..k8
    std::array<double, 5> m{};  // m1..m5
    double c5 = 1.0, c8 = 1.0;

    // Stiffness and mass matrices over this chain's DOFs.
    // XY: [m1 (drive), m2 (output), m3, m4 (port)]; Z: [m4 (drive/output), m5 (port)].
    Eigen::MatrixXd stiffness_matrix() const;
    Eigen::MatrixXd mass_matrix() const;
    int drive_dof() const { return 0; }
    int output_dof() const { return kind == ChainKind::XY ? 1 : 0; }
    int port_dof() const { return kind == ChainKind::XY ? 3 : 1; }
};

ChainModel build_chain_model(const std::map<std::string, StiffnessReport>& reports,
                             const std::array<double, 5>& masses, ChainKind kind,
                             double c5 = 1.0, double c8 = 1.0);

struct Transmission {
    double x_in = 0;
    double x_out = 0;
    double loss = 0;
};

Transmission static_transmission(const ChainModel& c, double force);

// Port displacement per unit active-axis (drive) displacement.
double port_leakage(const ChainModel& c);

std::vector<double> chain_modes(const ChainModel& c);

}  // namespace flexstage
