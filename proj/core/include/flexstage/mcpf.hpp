#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexstage/kinetostatics.hpp"

namespace flexstage {

// Geometry of one multi-layer compound parallelogram flexure (half unit).
// Lengths in metres.
struct McpfParams {
    double thickness = 0;
    double length = 0;
    double width = 0;
    int layer_count = 3;
    // Gap between the two beams of a layer, also the pitch between layers.
    // Zero selects the default l/10.
    double rigid_link_span = 0;
    // Load point P sits at X = -load_offset_ratio * l relative to the first
    // layer's attachment line.
    double load_offset_ratio = 0;
    bool mirrored = false;

    double span() const { return rigid_link_span > 0 ? rigid_link_span : length / 10.0; }
    void validate() const;
    // l < 20 t: still accepted, but outside the small-deflection comfort zone.
    bool slenderness_warning() const { return length < 20.0 * thickness; }
};

enum class LoadKind { Motional, Lateral };

// Drive component at P (in the P frame) and reaction components kept at
// every reaction point (in the reaction frame).
struct LoadCase {
    LoadKind kind = LoadKind::Motional;
    int drive_component = 2;
    std::array<int, 3> reaction_components{0, 1, 5};

    static LoadCase motional() { return {LoadKind::Motional, 2, {0, 1, 5}}; }
    static LoadCase lateral() { return {LoadKind::Lateral, 1, {2, 3, 4}}; }
};

struct Segment {
    SpatialFrame frame;  // origin at end 0, local x towards end 1
    double length = 0;
    CrossSection section;
    // Rigid body each end is attached to; -1 marks a reaction point.
    std::array<int, 2> body{-1, -1};
};

enum class PointKind { Clamp, Interface };

struct ReactionPoint {
    char label = 'A';
    PointKind kind = PointKind::Clamp;
    int segment = 0;
    int end = 1;
    int cut_body = -1;  // interface points: body the segment end was cut from
    SpatialFrame frame;
};

struct RigidLink {
    int body = 0;
    Vec3 from = Vec3::Zero();  // body reference point
    Vec3 to = Vec3::Zero();    // attachment point
};

struct HalfMcpfSkeleton {
    McpfParams params;
    std::vector<Vec3> body_origins;  // body 0 carries P
    std::vector<Segment> segments;
    std::vector<ReactionPoint> reactions;  // reactions[0] is the tree root
    std::vector<RigidLink> rigid_links;
    SpatialFrame load_frame;
    int load_body = 0;

    Vec3 segment_end(int i, int end) const;
};

HalfMcpfSkeleton build_half_skeleton(const McpfParams& params);

// Where a point load acts: on a rigid body, or on the free end of a reaction point.
struct LoadSite {
    enum class Kind { Body, Reaction } kind = Kind::Body;
    int index = 0;
};

// Wrench = basis * w, expressed in `frame`.
struct PointLoad {
    LoadSite site;
    SpatialFrame frame;
    Eigen::Matrix<double, 6, Eigen::Dynamic> basis;
};

// t_i(x) = (t0 + x t1) w in the segment frame translated to x along local x.
struct AffineWrenchMap {
    Eigen::Matrix<double, 6, Eigen::Dynamic> t0;
    Eigen::Matrix<double, 6, Eigen::Dynamic> t1;

    Vec6 at(double x, const Eigen::VectorXd& w) const { return (t0 + x * t1) * w; }
};

std::vector<AffineWrenchMap> internal_force_map(const HalfMcpfSkeleton& skel,
                                                const std::vector<PointLoad>& loads,
                                                int n_components);

struct LoadComponent {
    int reaction = -1;  // -1: the drive at P
    int component = 0;
};

// U(w) = 1/2 w^T Q w over w = [drive; redundant reaction components].
struct EnergyForm {
    LoadCase load_case;
    Eigen::MatrixXd q;
    std::vector<LoadComponent> layout;
    std::vector<AffineWrenchMap> segment_maps;
    Eigen::Matrix<double, 6, Eigen::Dynamic> root_reaction;  // w_root = root_reaction * w

    double energy(const Eigen::VectorXd& w) const { return 0.5 * w.dot(q * w); }
};

Eigen::Matrix<double, 6, 6> compliance_coefficients(const CrossSection& s, const Material& m);

std::vector<PointLoad> load_case_loads(const HalfMcpfSkeleton& skel, const LoadCase& lc,
                                       std::vector<LoadComponent>* layout = nullptr);

EnergyForm strain_energy_form(const HalfMcpfSkeleton& skel, const LoadCase& lc, const Material& mat);

struct ReactionSolution {
    Eigen::VectorXd w;
    std::vector<Wrench> reactions;  // same order as skeleton.reactions
    double drive_displacement = 0;  // dU/dF_P
    double compliance = 0;          // per unit drive
    double energy = 0;
    double stationarity_residual = 0;
    double condition_number = 0;
};

ReactionSolution solve_reactions(const EnergyForm& form, double drive);

// Half-unit stiffness for one load case.
double half_stiffness(const McpfParams& p, const Material& m, LoadKind kind);

// Full unit (two halves in parallel).
double motional_stiffness(const McpfParams& p, const Material& m);
double lateral_stiffness(const McpfParams& p, const Material& m);
double stiffness_ratio(const McpfParams& p, const Material& m);

struct StiffnessReport {
    std::string family;
    double k_motional = 0;
    double k_lateral = 0;
    double eta = 0;
    std::vector<char> reaction_labels;
    std::vector<Wrench> motional_reactions;  // half unit, unit drive
    std::vector<Wrench> lateral_reactions;
};

StiffnessReport compute_stiffness(const McpfParams& p, const Material& m, const std::string& family = "");

struct SweepGrid {
    std::vector<double> thickness;
    std::vector<double> length;
    std::vector<double> width;
};

struct SweepRow {
    std::array<int, 3> index{};
    double thickness = 0, length = 0, width = 0;
    double k_motional = 0, k_lateral = 0, eta = 0;
};

struct SweepFlags {
    bool k_increasing_in_t = true;
    bool k_decreasing_in_l = true;
    bool eta_increasing_in_b = true;
};

// Rows in t-major, then l, then b order. `base` supplies layer count, span
// and load offset.
std::vector<SweepRow> parameter_sweep(const SweepGrid& grid, const McpfParams& base, const Material& m);

// Points on the three visible faces of the grid cube (any index at its max).
std::vector<SweepRow> cabinet_subset(const std::vector<SweepRow>& rows, const SweepGrid& grid);

SweepFlags sweep_monotonicity(const std::vector<SweepRow>& rows, const SweepGrid& grid);

}  // namespace flexstage
