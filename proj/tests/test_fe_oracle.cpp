#include <random>

#include <catch_amalgamated.hpp>

#include "flexstage/errors.hpp"
#include "flexstage/fe_oracle.hpp"
#include "support.hpp"

using namespace flexstage;
using Catch::Approx;
using testing::rel;

namespace {

const Material kAl = Material::aluminium();

FrameModel cantilever(double l, int nel, bool shear, const CrossSection& s) {
    FrameModel m;
    for (int i = 0; i <= nel; ++i) m.add_node(Vec3(l * i / nel, 0, 0));
    for (int i = 0; i < nel; ++i) {
        FrameElement e;
        e.n1 = i;
        e.n2 = i + 1;
        e.section = s;
        e.material = kAl;
        e.shear_deformation = shear;
        m.elements.push_back(e);
    }
    m.fix(0);
    return m;
}

double uy(const FrameSolution& s, int node) { return s.displacements(6 * node + 1); }

}  // namespace

TEST_CASE("Euler-Bernoulli cantilever tip deflection") {
    const double l = 0.03, F = 0.7;
    CrossSection s = section_properties(0.4e-3, 12e-3);
    FrameModel m = cantilever(l, 5, false, s);
    Wrench w;
    w.force = Vec3(0, F, 0);
    m.add_load(5, w);
    FrameSolution sol = assemble_and_solve(m);
    const double exact = F * l * l * l / (3 * kAl.youngs_modulus * s.i_z);
    CHECK(rel(uy(sol, 5), exact) < 1e-9);
    CHECK(sol.residual <= 1e-8);
    CHECK(sol.reaction_imbalance <= 1e-9);
}

TEST_CASE("Timoshenko cantilever adds the shear term") {
    const double l = 0.005, F = 1.3;
    CrossSection s = section_properties(1e-3, 2e-3);
    FrameModel m = cantilever(l, 3, true, s);
    Wrench w;
    w.force = Vec3(0, F, 0);
    m.add_load(3, w);
    FrameSolution sol = assemble_and_solve(m);
    const double exact = F * l * l * l / (3 * kAl.youngs_modulus * s.i_z) +
                         kAl.shear_factor * F * l / (kAl.shear_modulus * s.area);
    CHECK(rel(uy(sol, 3), exact) < 1e-9);
}

TEST_CASE("unloaded model stays at rest") {
    FrameModel m = cantilever(0.02, 4, true, section_properties(0.3e-3, 6e-3));
    FrameSolution sol = assemble_and_solve(m);
    CHECK(sol.displacements.isZero(0));
}

TEST_CASE("constrained stiffness is symmetric positive definite") {
    FrameModel m = cantilever(0.02, 4, true, section_properties(0.3e-3, 6e-3));
    Eigen::MatrixXd k = reduced_stiffness(m);
    CHECK((k - k.transpose()).norm() <= 1e-12 * k.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() > 0);

    HalfMcpfSkeleton sk = build_half_skeleton(testing::xd());
    FeSkeletonModel fm = skeleton_frame_model(sk, kAl, 4);
    Eigen::MatrixXd ks = reduced_stiffness(fm.model);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(ks);
    CHECK((ks - ks.transpose()).norm() <= 1e-12 * ks.norm());
    CHECK(es2.eigenvalues().minCoeff() > 0);
}

TEST_CASE("reciprocity of displacements") {
    FrameModel base = cantilever(0.03, 6, true, section_properties(0.4e-3, 8e-3));
    base.elements[2].y_axis = Vec3(0, 1, 1).normalized();  // break the symmetry a little
    Wrench a, b;
    a.force = Vec3(0, 0, 1);
    b.moment = Vec3(0, 1, 0);
    FrameModel ma = base, mb = base;
    ma.add_load(3, a);
    mb.add_load(6, b);
    FrameSolution sa = assemble_and_solve(ma), sb = assemble_and_solve(mb);
    const double ab = sa.displacements(6 * 6 + 4);  // ry at node 6 from Fz at node 3
    const double ba = sb.displacements(6 * 3 + 2);  // uz at node 3 from My at node 6
    CHECK(std::abs(ab - ba) <= 1e-10 * std::max(std::abs(ab), 1e-12));
}

TEST_CASE("under-constrained model reports the zero-energy mode") {
    FrameModel m = cantilever(0.02, 2, true, section_properties(0.3e-3, 6e-3));
    m.fixed[0] = {false, false, false, false, false, false};
    Wrench w;
    w.force = Vec3(0, 1, 0);
    m.add_load(2, w);
    CHECK_THROWS_AS(assemble_and_solve(m), NumericalError);
}

TEST_CASE("model dump lists nodes and elements") {
    FrameModel m = cantilever(0.02, 2, true, section_properties(0.3e-3, 6e-3));
    std::string j = m.to_json();
    CHECK(j.find("\"nodes\"") != std::string::npos);
    CHECK(j.find("\"elements\"") != std::string::npos);
}

TEST_CASE("mesh refinement converges") {
    HalfMcpfSkeleton sk = build_half_skeleton(testing::xg());
    for (auto lc : {LoadCase::motional(), LoadCase::lateral()}) {
        const double k8 = fe_stiffness(sk, lc, kAl, 8).k_half, k16 = fe_stiffness(sk, lc, kAl, 16).k_half;
        CHECK(rel(k8, k16) < 1e-3);
    }
    CHECK_THROWS_AS(fe_stiffness(sk, LoadCase::motional(), kAl, 3), DomainError);
}

TEST_CASE("single-layer parallelogram against the closed form") {
    // Load at mid-length, where the guided beams have their inflection point,
    // so the body translates without rotating.
    McpfParams p = testing::xd();
    p.layer_count = 1;
    p.rigid_link_span = 0;
    p.load_offset_ratio = 0.5;
    HalfMcpfSkeleton sk = build_half_skeleton(p);
    CrossSection s = section_properties(p.thickness, p.width);
    const double k_guided = 2 * 12 * kAl.youngs_modulus * s.i_z / std::pow(p.length, 3);
    CHECK(rel(fe_stiffness(sk, LoadCase::motional(), kAl).k_half, k_guided) < 0.02);
}

TEST_CASE("beam FE agrees with Castigliano on random designs") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> t(0.3, 0.4), l(20, 50), span(0.1, 1.0), ratio(-0.6, 0.3);
    const double widths[] = {6, 8, 12};
    for (int k = 0; k < 12; ++k) {
        McpfParams p = testing::family(t(rng), l(rng), widths[k % 3], span(rng), ratio(rng));
        p.mirrored = k % 4 == 3;
        HalfMcpfSkeleton sk = build_half_skeleton(p);
        for (auto lc : {LoadCase::motional(), LoadCase::lateral()}) {
            ReactionSolution cs = solve_reactions(strain_energy_form(sk, lc, kAl), 1.0);
            FeStiffness fe = fe_stiffness(sk, lc, kAl);
            const double tol = lc.kind == LoadKind::Motional ? 0.01 : 0.05;
            CHECK(rel(fe.k_half, 1 / cs.compliance) < tol);
            double scale = 0, diff = 0;
            for (std::size_t i = 0; i < cs.reactions.size(); ++i) {
                scale = std::max(scale, cs.reactions[i].packed().cwiseAbs().maxCoeff());
                diff = std::max(diff, (cs.reactions[i].packed() - fe.reactions[i].packed()).cwiseAbs().maxCoeff());
            }
            CHECK(diff <= 1e-6 * scale);
        }
    }
}
