#include "flexstage/mcpf.hpp"

#include <cmath>
#include <string>

#include "flexstage/errors.hpp"

namespace flexstage {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Mat6X = Eigen::Matrix<double, 6, Eigen::Dynamic>;

void McpfParams::validate() const {
    if (!(thickness > 0) || !(length > 0) || !(width > 0))
        throw DomainError("MCPF dimensions must be positive");
    if (layer_count < 1) throw DomainError("layer_count must be >= 1");
    if (length < 10.0 * thickness)
        throw DomainError("beam too stubby: l must be at least 10 t");
    if (rigid_link_span < 0) throw DomainError("rigid_link_span must be non-negative");
    if (!std::isfinite(load_offset_ratio)) throw DomainError("load_offset_ratio must be finite");
    if (thickness > width) throw DomainError("thickness exceeds width");
}

Vec3 HalfMcpfSkeleton::segment_end(int i, int end) const {
    const Segment& s = segments.at(i);
    return end == 0 ? s.frame.origin : Vec3(s.frame.origin + s.length * s.frame.rotation.col(0));
}

HalfMcpfSkeleton build_half_skeleton(const McpfParams& p) {
    p.validate();
    HalfMcpfSkeleton sk;
    sk.params = p;
    const double l = p.length;
    const double s = p.span();
    const CrossSection sec = section_properties(p.thickness, p.width);

    // Folded stack: layer k runs from body k back or forth along X to body k+1.
    Mat3 flip;  // local x along -X, y kept along Y
    flip << -1, 0, 0,
             0, 1, 0,
             0, 0, -1;

    sk.body_origins.push_back(Vec3(-p.load_offset_ratio * l, 0, 0));
    double x0 = 0, y0 = 0;
    int body = 0;
    std::vector<std::pair<int, int>> clamp_ends, cut_ends;  // (segment, cut body)
    for (int layer = 0; layer < p.layer_count; ++layer) {
        const double dir = layer % 2 == 0 ? -1.0 : 1.0;
        const double x1 = x0 + dir * l;
        const bool last = layer == p.layer_count - 1;
        int next = -1;
        if (!last) {
            next = static_cast<int>(sk.body_origins.size());
            sk.body_origins.push_back(Vec3(x1, y0, 0));
        }
        for (int side = -1; side <= 1; side += 2) {
            const Vec3 a(x0, y0 + side * s / 2, 0);
            const Vec3 b(x1, y0 + side * s / 2, 0);
            Segment seg;
            seg.frame = SpatialFrame::at(a, dir < 0 ? flip : Mat3::Identity());
            seg.length = l;
            seg.section = sec;
            seg.body = {body, -1};
            sk.rigid_links.push_back({body, sk.body_origins[body], a});
            const int idx = static_cast<int>(sk.segments.size());
            if (last) {
                clamp_ends.push_back({idx, -1});
            } else if (side < 0) {
                seg.body[1] = next;
                sk.rigid_links.push_back({next, sk.body_origins[next], b});
            } else {
                // Cutting the outer beam of each intermediate layer opens the loop.
                cut_ends.push_back({idx, next});
                sk.rigid_links.push_back({next, sk.body_origins[next], b});
            }
            sk.segments.push_back(seg);
        }
        if (!last) {
            y0 += 2 * s;
            x0 = x1;
            sk.rigid_links.push_back({next, sk.body_origins[next], Vec3(x1, y0, 0)});
            body = next;
        }
    }

    char label = 'A';
    auto add_point = [&](int seg, int cut_body, PointKind kind) {
        ReactionPoint rp;
        rp.label = label++;
        rp.kind = kind;
        rp.segment = seg;
        rp.end = 1;
        rp.cut_body = cut_body;
        rp.frame = SpatialFrame::at(sk.segment_end(seg, 1));
        sk.reactions.push_back(rp);
    };
    for (auto [seg, cb] : clamp_ends) add_point(seg, cb, PointKind::Clamp);
    for (auto it = cut_ends.rbegin(); it != cut_ends.rend(); ++it)
        add_point(it->first, it->second, PointKind::Interface);

    // P frame: z along the motion axis Y, y along the width axis Z.
    Mat3 rp;
    rp << -1, 0, 0,
           0, 0, 1,
           0, 1, 0;
    sk.load_frame = SpatialFrame::at(sk.body_origins[0], rp);
    sk.load_body = 0;

    if (p.mirrored) {
        const Mat3 m = Eigen::Vector3d(1, -1, 1).asDiagonal();
        auto reflect = [&](SpatialFrame& f) {
            f.origin = m * f.origin;
            f.rotation = m * f.rotation * m;
        };
        for (auto& o : sk.body_origins) o = m * o;
        for (auto& seg : sk.segments) reflect(seg.frame);
        for (auto& r : sk.reactions) reflect(r.frame);
        for (auto& rl : sk.rigid_links) {
            rl.from = m * rl.from;
            rl.to = m * rl.to;
        }
        reflect(sk.load_frame);
    }
    return sk;
}

namespace {

struct Tree {
    int n_nodes = 0;
    std::vector<std::array<int, 2>> seg_nodes;
    std::vector<std::vector<char>> outboard;  // per segment: node membership of child side
};

Tree build_tree(const HalfMcpfSkeleton& sk) {
    const int nb = static_cast<int>(sk.body_origins.size());
    const int nr = static_cast<int>(sk.reactions.size());
    if (nr == 0) throw DomainError("skeleton has no reaction point");
    Tree t;
    t.n_nodes = nb + nr;
    const int ns = static_cast<int>(sk.segments.size());
    t.seg_nodes.assign(ns, {-1, -1});
    for (int i = 0; i < ns; ++i)
        for (int e = 0; e < 2; ++e) {
            const int b = sk.segments[i].body[e];
            if (b >= nb) throw DomainError("segment attached to unknown body");
            if (b >= 0) t.seg_nodes[i][e] = b;
        }
    for (int r = 0; r < nr; ++r) {
        const ReactionPoint& rp = sk.reactions[r];
        if (rp.segment < 0 || rp.segment >= ns || (rp.end != 0 && rp.end != 1))
            throw DomainError("reaction point refers to unknown segment end");
        int& slot = t.seg_nodes[rp.segment][rp.end];
        if (slot != -1) throw DomainError("segment end has two attachments");
        slot = nb + r;
    }
    for (int i = 0; i < ns; ++i)
        if (t.seg_nodes[i][0] < 0 || t.seg_nodes[i][1] < 0)
            throw DomainError("segment end left unattached");
    if (ns != t.n_nodes - 1) throw DomainError("skeleton is not a tree after cuts");

    std::vector<std::vector<std::pair<int, int>>> adj(t.n_nodes);
    for (int i = 0; i < ns; ++i) {
        adj[t.seg_nodes[i][0]].push_back({t.seg_nodes[i][1], i});
        adj[t.seg_nodes[i][1]].push_back({t.seg_nodes[i][0], i});
    }
    const int root = nb;  // reaction 0
    std::vector<int> parent_edge(t.n_nodes, -2), order;
    parent_edge[root] = -1;
    order.push_back(root);
    for (std::size_t k = 0; k < order.size(); ++k)
        for (auto [nbr, e] : adj[order[k]])
            if (parent_edge[nbr] == -2) {
                parent_edge[nbr] = e;
                order.push_back(nbr);
            }
    if (static_cast<int>(order.size()) != t.n_nodes)
        throw DomainError("skeleton is disconnected after cuts");

    t.outboard.assign(ns, std::vector<char>(t.n_nodes, 0));
    std::vector<int> child_of(ns, -1);
    for (int v = 0; v < t.n_nodes; ++v)
        if (parent_edge[v] >= 0) child_of[parent_edge[v]] = v;
    // Reverse BFS order visits children before parents.
    std::vector<std::vector<char>> sub(t.n_nodes, std::vector<char>(t.n_nodes, 0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        sub[v][v] = 1;
        for (auto [nbr, e] : adj[v])
            if (parent_edge[nbr] == e && nbr != v && child_of[e] == nbr)
                for (int u = 0; u < t.n_nodes; ++u) sub[v][u] |= sub[nbr][u];
    }
    for (int i = 0; i < ns; ++i) t.outboard[i] = sub[child_of[i]];
    return t;
}

int site_node(const HalfMcpfSkeleton& sk, const LoadSite& s) {
    const int nb = static_cast<int>(sk.body_origins.size());
    const int nr = static_cast<int>(sk.reactions.size());
    if (s.kind == LoadSite::Kind::Body) {
        if (s.index < 0 || s.index >= nb) throw DomainError("load at unknown point: body " + std::to_string(s.index));
        return s.index;
    }
    if (s.index < 0 || s.index >= nr) throw DomainError("load at unknown point: reaction " + std::to_string(s.index));
    return nb + s.index;
}

}  // namespace

std::vector<AffineWrenchMap> internal_force_map(const HalfMcpfSkeleton& sk,
                                                const std::vector<PointLoad>& loads,
                                                int n_components) {
    const Tree tree = build_tree(sk);
    std::vector<int> nodes;
    for (const PointLoad& pl : loads) {
        if (pl.basis.cols() != n_components) throw DomainError("load basis width mismatch");
        nodes.push_back(site_node(sk, pl.site));
    }
    const Mat3 e1 = skew(Vec3::UnitX());
    std::vector<AffineWrenchMap> maps;
    for (std::size_t i = 0; i < sk.segments.size(); ++i) {
        const SpatialFrame& f = sk.segments[i].frame;
        AffineWrenchMap m;
        m.t0 = Mat6X::Zero(6, n_components);
        m.t1 = Mat6X::Zero(6, n_components);
        for (std::size_t k = 0; k < loads.size(); ++k) {
            if (!tree.outboard[i][nodes[k]]) continue;
            const Mat6 j0 = wrench_transform(loads[k].frame, f);
            Mat6 j1 = Mat6::Zero();
            j1.bottomLeftCorner<3, 3>() = -e1 * j0.topLeftCorner<3, 3>();
            m.t0 += j0 * loads[k].basis;
            m.t1 += j1 * loads[k].basis;
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

Mat6 compliance_coefficients(const CrossSection& s, const Material& m) {
    if (!(s.area > 0) || !(s.i_p > 0) || !(s.i_y > 0) || !(s.i_z > 0))
        throw DomainError("singular section properties");
    Vec6 c;
    c << 1.0 / (m.youngs_modulus * s.area), m.shear_factor / (m.shear_modulus * s.area),
        m.shear_factor / (m.shear_modulus * s.area), 1.0 / (m.shear_modulus * s.i_p),
        1.0 / (m.youngs_modulus * s.i_y), 1.0 / (m.youngs_modulus * s.i_z);
    return c.asDiagonal();
}

std::vector<PointLoad> load_case_loads(const HalfMcpfSkeleton& sk, const LoadCase& lc,
                                       std::vector<LoadComponent>* layout) {
    const int nr = static_cast<int>(sk.reactions.size());
    const int n = 1 + 3 * (nr - 1);
    std::vector<PointLoad> loads;
    std::vector<LoadComponent> lay;

    PointLoad drive;
    drive.site = {LoadSite::Kind::Body, sk.load_body};
    drive.frame = sk.load_frame;
    drive.basis = Mat6X::Zero(6, n);
    drive.basis(lc.drive_component, 0) = 1.0;
    loads.push_back(drive);
    lay.push_back({-1, lc.drive_component});

    for (int r = 1; r < nr; ++r) {
        const ReactionPoint& rp = sk.reactions[r];
        PointLoad pl;
        pl.site = {LoadSite::Kind::Reaction, r};
        pl.frame = rp.frame;
        pl.basis = Mat6X::Zero(6, n);
        for (int c = 0; c < 3; ++c) {
            const int col = 1 + 3 * (r - 1) + c;
            pl.basis(lc.reaction_components[c], col) = 1.0;
            lay.push_back({r, lc.reaction_components[c]});
        }
        loads.push_back(pl);
        if (rp.kind == PointKind::Interface) {
            PointLoad opposite = pl;
            opposite.site = {LoadSite::Kind::Body, rp.cut_body};
            opposite.basis = -pl.basis;
            loads.push_back(opposite);
        }
    }
    if (layout) *layout = lay;
    return loads;
}

EnergyForm strain_energy_form(const HalfMcpfSkeleton& sk, const LoadCase& lc, const Material& mat) {
    mat.validate();
    EnergyForm form;
    form.load_case = lc;
    const std::vector<PointLoad> loads = load_case_loads(sk, lc, &form.layout);
    const int n = static_cast<int>(form.layout.size());
    form.segment_maps = internal_force_map(sk, loads, n);
    form.q = MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < sk.segments.size(); ++i) {
        const Segment& seg = sk.segments[i];
        const Mat6 c = compliance_coefficients(seg.section, mat);
        const auto& m = form.segment_maps[i];
        const double l = seg.length;
        const MatrixXd a = m.t0.transpose() * c * m.t0;
        const MatrixXd b = m.t0.transpose() * c * m.t1;
        const MatrixXd d = m.t1.transpose() * c * m.t1;
        form.q += a * l + (b + b.transpose()) * (l * l / 2) + d * (l * l * l / 3);
    }
    form.q = 0.5 * (form.q + form.q.transpose());

    // Root reaction from overall equilibrium; interface pairs cancel.
    const SpatialFrame& root = sk.reactions.at(0).frame;
    form.root_reaction = Mat6X::Zero(6, n);
    for (const PointLoad& pl : loads) form.root_reaction -= wrench_transform(pl.frame, root) * pl.basis;
    return form;
}

ReactionSolution solve_reactions(const EnergyForm& form, double drive) {
    const int n = static_cast<int>(form.q.rows());
    const int nr = n - 1;
    ReactionSolution sol;
    sol.w = VectorXd::Zero(n);
    sol.w(0) = drive;
    if (nr > 0) {
        const MatrixXd qrr = form.q.bottomRightCorner(nr, nr);
        const VectorXd qr0 = form.q.col(0).tail(nr);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(qrr, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        sol.condition_number = lo > 0 ? hi / lo : INFINITY;
        if (!(lo > 0) || sol.condition_number > 1e14)
            throw NumericalError("singular compatibility system (condition number " +
                                 std::to_string(sol.condition_number) + ")");
        Eigen::LDLT<MatrixXd> ldlt(qrr);
        const VectorXd r = ldlt.solve(-qr0 * drive);
        sol.w.tail(nr) = r;
        const VectorXd resid = qrr * r + qr0 * drive;
        const double scale = (qr0 * drive).norm();
        sol.stationarity_residual = scale > 0 ? resid.norm() / scale : resid.norm();

        const MatrixXd q0r = form.q.row(0).tail(nr);
        sol.compliance = form.q(0, 0) - (q0r * ldlt.solve(qr0))(0, 0);
    } else {
        sol.condition_number = 1;
        sol.compliance = form.q(0, 0);
    }
    sol.drive_displacement = (form.q.row(0) * sol.w)(0, 0);
    sol.energy = form.energy(sol.w);

    const int npts = nr / 3 + 1;
    sol.reactions.assign(npts, Wrench{});
    sol.reactions[0] = Wrench::unpack(form.root_reaction * sol.w);
    for (int k = 1; k < n; ++k) {
        const LoadComponent& lc = form.layout[k];
        Vec6 v = sol.reactions[lc.reaction].packed();
        v(lc.component) = sol.w(k);
        sol.reactions[lc.reaction] = Wrench::unpack(v);
    }
    return sol;
}

double half_stiffness(const McpfParams& p, const Material& m, LoadKind kind) {
    const HalfMcpfSkeleton sk = build_half_skeleton(p);
    const LoadCase lc = kind == LoadKind::Motional ? LoadCase::motional() : LoadCase::lateral();
    const ReactionSolution sol = solve_reactions(strain_energy_form(sk, lc, m), 1.0);
    if (!(sol.compliance > 0)) throw NumericalError("non-positive drive-point compliance");
    return 1.0 / sol.compliance;
}

double motional_stiffness(const McpfParams& p, const Material& m) {
    return 2.0 * half_stiffness(p, m, LoadKind::Motional);
}

double lateral_stiffness(const McpfParams& p, const Material& m) {
    return 2.0 * half_stiffness(p, m, LoadKind::Lateral);
}

double stiffness_ratio(const McpfParams& p, const Material& m) {
    return lateral_stiffness(p, m) / motional_stiffness(p, m);
}

StiffnessReport compute_stiffness(const McpfParams& p, const Material& m, const std::string& family) {
    const HalfMcpfSkeleton sk = build_half_skeleton(p);
    const ReactionSolution mo = solve_reactions(strain_energy_form(sk, LoadCase::motional(), m), 1.0);
    const ReactionSolution la = solve_reactions(strain_energy_form(sk, LoadCase::lateral(), m), 1.0);
    if (!(mo.compliance > 0) || !(la.compliance > 0))
        throw NumericalError("non-positive drive-point compliance");
    StiffnessReport r;
    r.family = family;
    r.k_motional = 2.0 / mo.compliance;
    r.k_lateral = 2.0 / la.compliance;
    r.eta = r.k_lateral / r.k_motional;
    for (const auto& rp : sk.reactions) r.reaction_labels.push_back(rp.label);
    r.motional_reactions = mo.reactions;
    r.lateral_reactions = la.reactions;
    return r;
}

std::vector<SweepRow> parameter_sweep(const SweepGrid& g, const McpfParams& base, const Material& m) {
    if (g.thickness.empty() || g.length.empty() || g.width.empty())
        throw DomainError("sweep grid axis is empty");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < g.thickness.size(); ++i)
        for (std::size_t j = 0; j < g.length.size(); ++j)
            for (std::size_t k = 0; k < g.width.size(); ++k) {
                McpfParams p = base;
                p.thickness = g.thickness[i];
                p.length = g.length[j];
                p.width = g.width[k];
                SweepRow row;
                row.index = {static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)};
                row.thickness = p.thickness;
                row.length = p.length;
                row.width = p.width;
                row.k_motional = motional_stiffness(p, m);
                row.k_lateral = lateral_stiffness(p, m);
                row.eta = row.k_lateral / row.k_motional;
                rows.push_back(row);
            }
    return rows;
}

std::vector<SweepRow> cabinet_subset(const std::vector<SweepRow>& rows, const SweepGrid& g) {
    const int ni = static_cast<int>(g.thickness.size()) - 1;
    const int nj = static_cast<int>(g.length.size()) - 1;
    const int nk = static_cast<int>(g.width.size()) - 1;
    std::vector<SweepRow> out;
    for (const SweepRow& r : rows)
        if (r.index[0] == ni || r.index[1] == nj || r.index[2] == nk) out.push_back(r);
    return out;
}

SweepFlags sweep_monotonicity(const std::vector<SweepRow>& rows, const SweepGrid& g) {
    const std::size_t nl = g.length.size(), nb = g.width.size();
    auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> const SweepRow& {
        return rows.at((i * nl + j) * nb + k);
    };
    SweepFlags f;
    for (std::size_t i = 0; i < g.thickness.size(); ++i)
        for (std::size_t j = 0; j < nl; ++j)
            for (std::size_t k = 0; k < nb; ++k) {
                if (i > 0 && !(at(i, j, k).k_motional > at(i - 1, j, k).k_motional)) f.k_increasing_in_t = false;
                if (j > 0 && !(at(i, j, k).k_motional < at(i, j - 1, k).k_motional)) f.k_decreasing_in_l = false;
                if (k > 0 && !(at(i, j, k).eta > at(i, j, k - 1).eta)) f.eta_increasing_in_b = false;
            }
    return f;
}

}  // namespace flexstage
