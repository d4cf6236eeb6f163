#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flexstage/kinetostatics.hpp"
#include "flexstage/mcpf.hpp"

namespace flexstage {

// Nodes with master >= 0 are rigidly slaved to that (independent) node.
struct FrameNode {
    Vec3 position = Vec3::Zero();
    int master = -1;
};

// Two-node 12-DOF Timoshenko frame element. y_axis fixes the local section
// orientation (thickness direction).
struct FrameElement {
    int n1 = 0, n2 = 0;
    CrossSection section;
    Material material;
    Vec3 y_axis = Vec3::UnitY();
    bool shear_deformation = true;
};

struct FrameModel {
    std::vector<FrameNode> nodes;
    std::vector<FrameElement> elements;
    std::vector<std::array<bool, 6>> fixed;  // per node, DOFs (ux,uy,uz,rx,ry,rz)
    std::vector<std::pair<int, Wrench>> loads;  // global axes, at the node

    int add_node(const Vec3& p, int master = -1);
    void fix(int node);
    void add_load(int node, const Wrench& w);
    std::string to_json() const;
};

struct FrameSolution {
    Eigen::VectorXd displacements;                  // 6 per node, every node
    std::vector<std::pair<int, Wrench>> reactions;  // support reactions on the structure
    double residual = 0;            // ||K u - f|| / ||f|| over free DOFs
    double reaction_imbalance = 0;  // relative resultant of loads + reactions about the origin
};

Eigen::Matrix<double, 12, 12> element_stiffness_local(const FrameElement& e, double length);
Eigen::Matrix<double, 12, 12> element_stiffness_global(const FrameModel& m, const FrameElement& e);

// Stiffness over independent, unconstrained DOFs.
Eigen::MatrixXd reduced_stiffness(const FrameModel& m);

FrameSolution assemble_and_solve(const FrameModel& m);

// Wrench the nodes apply on element `elem` at `end` (0 or 1), global axes at the node.
Wrench element_end_wrench(const FrameModel& m, const FrameSolution& s, int elem, int end);

struct FeSkeletonModel {
    FrameModel model;
    int load_node = 0;
    std::vector<int> reaction_elements;  // element touching each reaction point
    std::vector<int> reaction_ends;
};

FeSkeletonModel skeleton_frame_model(const HalfMcpfSkeleton& sk, const Material& mat, int elements_per_segment = 8);

struct FeStiffness {
    double k_half = 0;
    std::vector<Wrench> reactions;  // per skeleton reaction point, in its frame, unit drive
};

FeStiffness fe_stiffness(const HalfMcpfSkeleton& sk, const LoadCase& lc, const Material& mat,
                         int elements_per_segment = 8);

}  // namespace flexstage
