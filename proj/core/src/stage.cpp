#include "flexstage/stage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flexstage/errors.hpp"

namespace flexstage {

using Eigen::MatrixXd;

AxisStiffnessCoefficients xy_coefficients(const StageTopology& t) {
    return {t.xy_decoupler_blocks, t.xy_guiders_per_axis()};
}

AxisStiffnessCoefficients z_coefficients(const StageTopology& t) {
    return {t.z_decouplers, t.z_guiders};
}

double axis_stiffness_xy(double k_xdm, double k_xgm) {
    if (!(k_xdm > 0) || !(k_xgm > 0)) throw DomainError("axis stiffness inputs must be positive");
    const auto c = xy_coefficients();
    return c.decoupler * k_xdm + c.guider * k_xgm;
}

double axis_stiffness_z(double k_zgm, double k_zdm) {
    if (!(k_zgm > 0) || !(k_zdm > 0)) throw DomainError("axis stiffness inputs must be positive");
    const auto c = z_coefficients();
    return c.guider * k_zgm + c.decoupler * k_zdm;
}

void StageConfig::validate() const {
    for (const char* f : {"xg", "xd", "zg", "zd"}) {
        auto it = families.find(f);
        if (it == families.end()) throw DomainError(std::string("missing MCPF family ") + f);
        it->second.validate();
    }
    for (double m : masses)
        if (!(m > 0)) throw DomainError("masses must be positive");
    for (double c : damping)
        if (!(c >= 0)) throw DomainError("damping must be non-negative");
    for (double m : chain_masses)
        if (!(m > 0)) throw DomainError("chain masses must be positive");
    if (!(c5 > 0) || !(c8 > 0)) throw DomainError("coupling constants must be positive");
}

ModalResult general_modes(const MatrixXd& m, const MatrixXd& k) {
    if (m.rows() != m.cols() || k.rows() != k.cols() || m.rows() != k.rows())
        throw DomainError("mass and stiffness matrices must be square and of equal size");
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(k, m);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-solve failed (mass matrix not positive definite)");
    ModalResult r;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double w2 = es.eigenvalues()(i);
        if (!(w2 > 0)) throw NumericalError("indefinite stiffness matrix: eigenvalue " + std::to_string(w2));
        r.frequencies_hz.push_back(std::sqrt(w2) / (2 * std::numbers::pi));
        int dom = 0;
        es.eigenvectors().col(i).cwiseAbs().maxCoeff(&dom);
        r.order.push_back(dom);
    }
    return r;
}

ModalResult natural_frequencies(const Eigen::Matrix3d& m, const Eigen::Matrix3d& k) {
    const bool diagonal = m.isDiagonal(0.0) && k.isDiagonal(0.0);
    if (!diagonal) return general_modes(m, k);
    std::vector<std::pair<double, int>> f;
    for (int i = 0; i < 3; ++i) {
        if (!(m(i, i) > 0) || !(k(i, i) > 0)) throw DomainError("nonpositive diagonal entry");
        f.push_back({std::sqrt(k(i, i) / m(i, i)) / (2 * std::numbers::pi), i});
    }
    std::stable_sort(f.begin(), f.end(), [](auto a, auto b) { return a.first < b.first; });
    ModalResult r;
    for (auto [hz, i] : f) {
        r.frequencies_hz.push_back(hz);
        r.order.push_back(i);
    }
    return r;
}

MatrixXd ChainModel::stiffness_matrix() const {
    auto spring = [](MatrixXd& kk, int a, int b, double s) {
        kk(a, a) += s;
        if (b >= 0) {
            kk(b, b) += s;
            kk(a, b) -= s;
            kk(b, a) -= s;
        }
    };
    if (kind == ChainKind::XY) {
        MatrixXd kk = MatrixXd::Zero(4, 4);
        spring(kk, 0, -1, k[0]);
        spring(kk, 0, 1, k[1]);
        spring(kk, 1, 2, k[2]);
        spring(kk, 2, 3, k[3]);
        spring(kk, 3, -1, k[4]);
        return kk;
    }
    MatrixXd kk = MatrixXd::Zero(2, 2);
    spring(kk, 0, -1, k[5]);
    spring(kk, 0, 1, k[6]);
    spring(kk, 1, -1, k[7]);
    return kk;
}

MatrixXd ChainModel::mass_matrix() const {
    if (kind == ChainKind::XY) return Eigen::Vector4d(m[0], m[1], m[2], m[3]).asDiagonal();
    return Eigen::Vector2d(m[3], m[4]).asDiagonal();
}

ChainModel build_chain_model(const std::map<std::string, StiffnessReport>& reports,
                             const std::array<double, 5>& masses, ChainKind kind, double c5, double c8) {
    auto get = [&](const char* f) -> const StiffnessReport& {
        auto it = reports.find(f);
        if (it == reports.end()) throw DomainError(std::string("missing family ") + f);
        return it->second;
    };
    if (!(c5 > 0) || !(c8 > 0)) throw DomainError("coupling constants must be positive");
    const auto& xd = get("xd");
    const auto& xg = get("xg");
    const auto& zd = get("zd");
    const auto& zg = get("zg");
    ChainModel c;
    c.kind = kind;
    c.m = masses;
    c.c5 = c5;
    c.c8 = c8;
    c.k = {6 * xd.k_motional, 2 * zd.k_lateral, 4 * xg.k_lateral, 4 * xg.k_motional,
           c5 * zg.k_lateral, 8 * zg.k_motional, 4 * zd.k_motional, c8 * xd.k_lateral};
    for (double s : c.k)
        if (!(s > 0)) throw DomainError("chain springs must be positive");
    return c;
}

Transmission static_transmission(const ChainModel& c, double force) {
    const MatrixXd kk = c.stiffness_matrix();
    Eigen::LDLT<MatrixXd> ldlt(kk);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0)
        throw NumericalError("singular spring network");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(kk.rows());
    f(c.drive_dof()) = force;
    const Eigen::VectorXd x = ldlt.solve(f);
    Transmission t;
    t.x_in = x(c.drive_dof());
    t.x_out = x(c.output_dof());
    t.loss = t.x_in != 0 ? 1.0 - t.x_out / t.x_in : 0.0;
    return t;
}

double port_leakage(const ChainModel& c) {
    const MatrixXd kk = c.stiffness_matrix();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(kk.rows());
    f(c.drive_dof()) = 1.0;
    const Eigen::VectorXd x = kk.ldlt().solve(f);
    return x(c.port_dof()) / x(c.drive_dof());
}

std::vector<double> chain_modes(const ChainModel& c) {
    return general_modes(c.mass_matrix(), c.stiffness_matrix()).frequencies_hz;
}

}  // namespace flexstage
