#include "flexstage/fe_oracle.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "flexstage/errors.hpp"

namespace flexstage {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Mat12 = Eigen::Matrix<double, 12, 12>;

int FrameModel::add_node(const Vec3& p, int master) {
    nodes.push_back({p, master});
    fixed.push_back({false, false, false, false, false, false});
    return static_cast<int>(nodes.size()) - 1;
}

void FrameModel::fix(int node) { fixed.at(node) = {true, true, true, true, true, true}; }

void FrameModel::add_load(int node, const Wrench& w) { loads.push_back({node, w}); }

std::string FrameModel::to_json() const {
    using nlohmann::json;
    json j;
    j["units"] = {{"length", "m"}, {"force", "N"}, {"modulus", "Pa"}};
    json jn = json::array();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        jn.push_back({{"id", i}, {"position", {n.position.x(), n.position.y(), n.position.z()}}, {"master", n.master}});
    }
    json je = json::array();
    for (const auto& e : elements)
        je.push_back({{"nodes", {e.n1, e.n2}},
                      {"thickness", e.section.thickness},
                      {"width", e.section.width},
                      {"E", e.material.youngs_modulus},
                      {"G", e.material.shear_modulus},
                      {"shear_factor", e.material.shear_factor},
                      {"y_axis", {e.y_axis.x(), e.y_axis.y(), e.y_axis.z()}},
                      {"shear_deformation", e.shear_deformation}});
    json jc = json::array();
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        bool any = false;
        for (bool b : fixed[i]) any = any || b;
        if (any) jc.push_back({{"node", i}, {"dofs", fixed[i]}});
    }
    json jl = json::array();
    for (const auto& [node, w] : loads) {
        const Vec6 v = w.packed();
        jl.push_back({{"node", node}, {"wrench", std::vector<double>(v.data(), v.data() + 6)}});
    }
    j["nodes"] = jn;
    j["elements"] = je;
    j["constraints"] = jc;
    j["loads"] = jl;
    return j.dump(2);
}

Mat12 element_stiffness_local(const FrameElement& e, double L) {
    const CrossSection& s = e.section;
    const Material& m = e.material;
    const double E = m.youngs_modulus, G = m.shear_modulus;
    const double phi_y = e.shear_deformation ? 12 * E * s.i_z * m.shear_factor / (G * s.area * L * L) : 0.0;
    const double phi_z = e.shear_deformation ? 12 * E * s.i_y * m.shear_factor / (G * s.area * L * L) : 0.0;
    Mat12 k = Mat12::Zero();

    const double ea = E * s.area / L;
    k(0, 0) = k(6, 6) = ea;
    k(0, 6) = k(6, 0) = -ea;
    const double gj = G * s.i_p / L;
    k(3, 3) = k(9, 9) = gj;
    k(3, 9) = k(9, 3) = -gj;

    // Bending in the local x-y plane: v (1, 7), theta_z (5, 11).
    {
        const double c = E * s.i_z / (L * L * L * (1 + phi_y));
        const int v1 = 1, t1 = 5, v2 = 7, t2 = 11;
        k(v1, v1) = k(v2, v2) = 12 * c;
        k(v1, v2) = k(v2, v1) = -12 * c;
        k(v1, t1) = k(t1, v1) = k(v1, t2) = k(t2, v1) = 6 * L * c;
        k(v2, t1) = k(t1, v2) = k(v2, t2) = k(t2, v2) = -6 * L * c;
        k(t1, t1) = k(t2, t2) = (4 + phi_y) * L * L * c;
        k(t1, t2) = k(t2, t1) = (2 - phi_y) * L * L * c;
    }
    // Bending in the local x-z plane: w (2, 8), theta_y (4, 10).
    {
        const double c = E * s.i_y / (L * L * L * (1 + phi_z));
        const int w1 = 2, t1 = 4, w2 = 8, t2 = 10;
        k(w1, w1) = k(w2, w2) = 12 * c;
        k(w1, w2) = k(w2, w1) = -12 * c;
        k(w1, t1) = k(t1, w1) = k(w1, t2) = k(t2, w1) = -6 * L * c;
        k(w2, t1) = k(t1, w2) = k(w2, t2) = k(t2, w2) = 6 * L * c;
        k(t1, t1) = k(t2, t2) = (4 + phi_z) * L * L * c;
        k(t1, t2) = k(t2, t1) = (2 - phi_z) * L * L * c;
    }
    return k;
}

namespace {

Mat3 element_axes(const FrameModel& m, const FrameElement& e, double* length) {
    const Vec3 d = m.nodes.at(e.n2).position - m.nodes.at(e.n1).position;
    const double L = d.norm();
    if (!(L > 0)) throw DomainError("zero-length element");
    const Vec3 ex = d / L;
    Vec3 ey = e.y_axis - e.y_axis.dot(ex) * ex;
    if (ey.norm() < 1e-9) throw DomainError("element y_axis parallel to element axis");
    ey.normalize();
    const Vec3 ez = ex.cross(ey);
    Mat3 lam;
    lam.row(0) = ex;
    lam.row(1) = ey;
    lam.row(2) = ez;
    if (length) *length = L;
    return lam;
}

// Maps independent (master) node DOFs to every node's DOFs.
struct DofMap {
    std::vector<int> master_index;  // node -> index among independent nodes, -1 for slaves
    std::vector<int> independent;
    MatrixXd t;                     // (6 n) x (6 n_ind)
};

DofMap dof_map(const FrameModel& m) {
    const int n = static_cast<int>(m.nodes.size());
    DofMap d;
    d.master_index.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        const int ms = m.nodes[i].master;
        if (ms < 0) {
            d.master_index[i] = static_cast<int>(d.independent.size());
            d.independent.push_back(i);
        } else if (ms >= n || m.nodes[ms].master >= 0) {
            throw DomainError("node " + std::to_string(i) + " slaved to a non-independent node");
        }
    }
    d.t = MatrixXd::Zero(6 * n, 6 * d.independent.size());
    for (int i = 0; i < n; ++i) {
        const int ms = m.nodes[i].master;
        if (ms < 0) {
            d.t.block<6, 6>(6 * i, 6 * d.master_index[i]).setIdentity();
        } else {
            for (int c = 0; c < 6; ++c)
                if (m.fixed[i][c]) throw DomainError("constraint on slaved node " + std::to_string(i));
            const Vec3 r = m.nodes[i].position - m.nodes[ms].position;
            auto blk = d.t.block<6, 6>(6 * i, 6 * d.master_index[ms]);
            blk.setIdentity();
            blk.topRightCorner<3, 3>() = -skew(r);
        }
    }
    return d;
}

MatrixXd full_stiffness(const FrameModel& m) {
    const int n = static_cast<int>(m.nodes.size());
    MatrixXd k = MatrixXd::Zero(6 * n, 6 * n);
    std::vector<char> used(n, 0);
    for (const auto& e : m.elements) {
        if (e.n1 < 0 || e.n2 < 0 || e.n1 >= n || e.n2 >= n || e.n1 == e.n2)
            throw DomainError("element refers to invalid nodes");
        const Mat12 kg = element_stiffness_global(m, e);
        const int idx[2] = {e.n1, e.n2};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) k.block<6, 6>(6 * idx[a], 6 * idx[b]) += kg.block<6, 6>(6 * a, 6 * b);
        used[e.n1] = used[e.n2] = 1;
    }
    for (int i = 0; i < n; ++i)
        if (!used[i] && m.nodes[i].master < 0) {
            // Independent node with slaves attached is fine; a bare one is an orphan.
            bool has_slave = false;
            for (const auto& nd : m.nodes) has_slave = has_slave || nd.master == i;
            if (!has_slave) throw DomainError("orphan node " + std::to_string(i));
        }
    return k;
}

std::vector<int> free_dofs(const FrameModel& m, const DofMap& d) {
    std::vector<int> out;
    for (std::size_t j = 0; j < d.independent.size(); ++j)
        for (int c = 0; c < 6; ++c)
            if (!m.fixed[d.independent[j]][c]) out.push_back(static_cast<int>(6 * j + c));
    return out;
}

}  // namespace

Mat12 element_stiffness_global(const FrameModel& m, const FrameElement& e) {
    double L = 0;
    const Mat3 lam = element_axes(m, e, &L);
    Mat12 t = Mat12::Zero();
    for (int b = 0; b < 4; ++b) t.block<3, 3>(3 * b, 3 * b) = lam;
    return t.transpose() * element_stiffness_local(e, L) * t;
}

MatrixXd reduced_stiffness(const FrameModel& m) {
    const DofMap d = dof_map(m);
    const MatrixXd kr = d.t.transpose() * full_stiffness(m) * d.t;
    const std::vector<int> fr = free_dofs(m, d);
    MatrixXd out(fr.size(), fr.size());
    for (std::size_t a = 0; a < fr.size(); ++a)
        for (std::size_t b = 0; b < fr.size(); ++b) out(a, b) = kr(fr[a], fr[b]);
    return out;
}

FrameSolution assemble_and_solve(const FrameModel& m) {
    const int n = static_cast<int>(m.nodes.size());
    if (m.fixed.size() != m.nodes.size()) throw DomainError("constraint table size mismatch");
    const DofMap d = dof_map(m);
    const MatrixXd kfull = full_stiffness(m);
    const MatrixXd kr = d.t.transpose() * kfull * d.t;

    VectorXd f = VectorXd::Zero(6 * n);
    for (const auto& [node, w] : m.loads) {
        if (node < 0 || node >= n) throw DomainError("load on unknown node");
        f.segment<6>(6 * node) += w.packed();
    }
    const VectorXd fr = d.t.transpose() * f;
    const std::vector<int> fd = free_dofs(m, d);
    const int nf = static_cast<int>(fd.size());

    MatrixXd kff(nf, nf);
    VectorXd ff(nf);
    for (int a = 0; a < nf; ++a) {
        ff(a) = fr(fd[a]);
        for (int b = 0; b < nf; ++b) kff(a, b) = kr(fd[a], fd[b]);
    }
    Eigen::LLT<MatrixXd> llt(kff);
    const double diag_scale = kff.diagonal().cwiseAbs().maxCoeff();
    bool singular = llt.info() != Eigen::Success;
    if (!singular) {
        const double mind = llt.matrixL().toDenseMatrix().diagonal().cwiseAbs2().minCoeff();
        singular = mind < 1e-13 * diag_scale;
    }
    if (singular) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(kff);
        const VectorXd mode = es.eigenvectors().col(0);
        int worst = 0;
        mode.cwiseAbs().maxCoeff(&worst);
        const int dof = fd[worst];
        std::ostringstream os;
        os << "singular stiffness (under-constrained): zero-energy mode dominated by node "
           << d.independent[dof / 6] << " dof " << dof % 6 << ", eigenvalue " << es.eigenvalues()(0);
        throw NumericalError(os.str());
    }
    const VectorXd uf = llt.solve(ff);

    VectorXd ur = VectorXd::Zero(kr.rows());
    for (int a = 0; a < nf; ++a) ur(fd[a]) = uf(a);

    FrameSolution sol;
    sol.displacements = d.t * ur;
    const double fn = ff.norm();
    sol.residual = fn > 0 ? (kff * uf - ff).norm() / fn : (kff * uf - ff).norm();

    const VectorXd rr = kr * ur - fr;  // support reactions on independent DOFs
    Vec6 total = Vec6::Zero();
    double scale = 0;
    const SpatialFrame world;
    for (std::size_t j = 0; j < d.independent.size(); ++j) {
        const int node = d.independent[j];
        bool any = false;
        Vec6 r = Vec6::Zero();
        for (int c = 0; c < 6; ++c)
            if (m.fixed[node][c]) {
                any = true;
                r(c) = rr(6 * j + c);
            }
        if (!any) continue;
        sol.reactions.push_back({node, Wrench::unpack(r)});
        const Vec6 at0 = wrench_transform(SpatialFrame::at(m.nodes[node].position), world) * r;
        total += at0;
        scale = std::max(scale, at0.norm());
    }
    for (const auto& [node, w] : m.loads) {
        const Vec6 at0 = wrench_transform(SpatialFrame::at(m.nodes[node].position), world) * w.packed();
        total += at0;
        scale = std::max(scale, at0.norm());
    }
    sol.reaction_imbalance = scale > 0 ? total.norm() / scale : 0.0;
    return sol;
}

Wrench element_end_wrench(const FrameModel& m, const FrameSolution& s, int elem, int end) {
    const FrameElement& e = m.elements.at(elem);
    Eigen::Matrix<double, 12, 1> u;
    u << s.displacements.segment<6>(6 * e.n1), s.displacements.segment<6>(6 * e.n2);
    const Eigen::Matrix<double, 12, 1> f = element_stiffness_global(m, e) * u;
    return Wrench::unpack(f.segment<6>(6 * end));
}

FeSkeletonModel skeleton_frame_model(const HalfMcpfSkeleton& sk, const Material& mat, int nel) {
    if (nel < 1) throw DomainError("meshing failure: need at least one element per segment");
    mat.validate();
    FeSkeletonModel out;
    FrameModel& fm = out.model;
    std::vector<int> body_node;
    for (const Vec3& o : sk.body_origins) body_node.push_back(fm.add_node(o));
    out.load_node = body_node.at(sk.load_body);

    const int nr = static_cast<int>(sk.reactions.size());
    out.reaction_elements.assign(nr, -1);
    out.reaction_ends.assign(nr, 1);
    for (std::size_t i = 0; i < sk.segments.size(); ++i) {
        const Segment& seg = sk.segments[i];
        std::array<int, 2> end_node{};
        for (int e = 0; e < 2; ++e) {
            const Vec3 p = sk.segment_end(static_cast<int>(i), e);
            int attach = seg.body[e];
            int rp = -1;
            for (int r = 0; r < nr; ++r)
                if (sk.reactions[r].segment == static_cast<int>(i) && sk.reactions[r].end == e) rp = r;
            if (attach < 0 && rp >= 0 && sk.reactions[rp].kind == PointKind::Interface)
                attach = sk.reactions[rp].cut_body;
            if (attach >= 0) {
                end_node[e] = fm.add_node(p, body_node.at(attach));
            } else {
                if (rp < 0) throw DomainError("meshing failure: dangling segment end");
                end_node[e] = fm.add_node(p);
                fm.fix(end_node[e]);
            }
        }
        const Vec3 a = fm.nodes[end_node[0]].position;
        const Vec3 b = fm.nodes[end_node[1]].position;
        int prev = end_node[0];
        const int first_elem = static_cast<int>(fm.elements.size());
        for (int k = 1; k <= nel; ++k) {
            const int next = k == nel ? end_node[1] : fm.add_node(a + (b - a) * (double(k) / nel));
            FrameElement el;
            el.n1 = prev;
            el.n2 = next;
            el.section = seg.section;
            el.material = mat;
            el.y_axis = seg.frame.rotation.col(1);
            fm.elements.push_back(el);
            prev = next;
        }
        for (int r = 0; r < nr; ++r)
            if (sk.reactions[r].segment == static_cast<int>(i)) {
                out.reaction_elements[r] = sk.reactions[r].end == 0 ? first_elem : first_elem + nel - 1;
                out.reaction_ends[r] = sk.reactions[r].end;
            }
    }
    return out;
}

FeStiffness fe_stiffness(const HalfMcpfSkeleton& sk, const LoadCase& lc, const Material& mat, int nel) {
    if (nel < 4) throw DomainError("meshing failure: at least 4 elements per compliant segment required");
    if (lc.drive_component < 0 || lc.drive_component > 2) throw DomainError("drive must be a force component");
    FeSkeletonModel fsm = skeleton_frame_model(sk, mat, nel);
    const Vec3 dir = sk.load_frame.rotation.col(lc.drive_component);
    fsm.model.add_load(fsm.load_node, Wrench{dir, Vec3::Zero()});
    const FrameSolution sol = assemble_and_solve(fsm.model);
    const double delta = sol.displacements.segment<3>(6 * fsm.load_node).dot(dir);
    if (!(delta > 0)) throw NumericalError("non-positive drive-point displacement");
    FeStiffness out;
    out.k_half = 1.0 / delta;
    for (std::size_t r = 0; r < sk.reactions.size(); ++r) {
        const int el = fsm.reaction_elements[r];
        const int end = fsm.reaction_ends[r];
        const FrameElement& e = fsm.model.elements[el];
        const Vec3 p = fsm.model.nodes[end == 0 ? e.n1 : e.n2].position;
        const Wrench w = element_end_wrench(fsm.model, sol, el, end);
        out.reactions.push_back(Wrench::unpack(wrench_transform(SpatialFrame::at(p), sk.reactions[r].frame) * w.packed()));
    }
    return out;
}

}  // namespace flexstage
