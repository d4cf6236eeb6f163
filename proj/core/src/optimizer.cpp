#include "flexstage/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "flexstage/errors.hpp"

namespace flexstage {

McpfParams FamilyGeometry::params(double t_mm, double l_mm) const {
    McpfParams p;
    p.thickness = t_mm * 1e-3;
    p.length = l_mm * 1e-3;
    p.width = width_mm * 1e-3;
    p.layer_count = layer_count;
    p.rigid_link_span = span_mm * 1e-3;
    p.load_offset_ratio = load_offset_ratio;
    return p;
}

void OptProblem::validate() const {
    for (int i = 0; i < 4; ++i)
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
            throw DomainError("optimizer bounds must be finite with min < max");
    if (!(max_force_n > 0) || !(stroke_mm > 0)) throw DomainError("force and stroke must be positive");
    if (!(guider.width_mm > 0) || !(decoupler.width_mm > 0)) throw DomainError("family widths must be positive");
    material.validate();
}

double Individual::total_violation() const {
    double s = 0;
    for (double v : violations) s += std::max(0.0, v);
    return s;
}

Individual evaluate(const OptProblem& p, DesignVector par) {
    Individual ind;
    for (int i = 0; i < 4; ++i) {
        const double c = std::clamp(par[i], p.lower[i], p.upper[i]);
        if (c != par[i]) ind.clamped = true;
        par[i] = c;
    }
    ind.par = par;
    try {
        const McpfParams g = p.guider.params(par[0], par[1]);
        const McpfParams d = p.decoupler.params(par[2], par[3]);
        const StiffnessReport rg = compute_stiffness(g, p.material);
        const StiffnessReport rd = compute_stiffness(d, p.material);
        const double k = p.axis == Axis::XY ? axis_stiffness_xy(rd.k_motional, rg.k_motional)
                                            : axis_stiffness_z(rg.k_motional, rd.k_motional);
        ind.objectives = {k, rd.eta, rg.eta};
        const double ceiling = p.stiffness_ceiling();
        ind.violations[0] = (k - ceiling) / ceiling;
        ind.violations[1] = (p.eta_decoupler_min - rd.eta) / p.eta_decoupler_min;
        ind.violations[2] = (p.eta_guider_min - rg.eta) / p.eta_guider_min;
        const double tmin = std::min(par[0], par[2]);
        ind.violations[3] = (p.min_thickness_mm - tmin) / p.min_thickness_mm;
    } catch (const std::exception& e) {
        ind.objectives = {0, 0, 0};
        ind.violations = {1e6, 1e6, 1e6, 1e6};
        ind.diagnostics = e.what();
    }
    ind.feasible = true;
    for (double v : ind.violations) ind.feasible = ind.feasible && v <= 0;
    return ind;
}

void GaSettings::validate() const {
    if (population < 4 || population % 2 != 0) throw DomainError("population must be an even number >= 4");
    if (generations < 0) throw DomainError("generations must be non-negative");
    if (!(mutation_probability >= 0 && mutation_probability <= 1)) throw DomainError("mutation probability outside [0,1]");
    if (!(crossover_probability >= 0 && crossover_probability <= 1)) throw DomainError("crossover probability outside [0,1]");
    if (!(eta_crossover > 0) || !(eta_mutation > 0)) throw DomainError("distribution indices must be positive");
}

bool dominates(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    bool strict = false;
    for (int i = 0; i < 3; ++i) {
        if (a[i] < b[i]) return false;
        if (a[i] > b[i]) strict = true;
    }
    return strict;
}

bool constrained_dominates(const Individual& a, const Individual& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (!a.feasible) return a.total_violation() < b.total_violation();
    return dominates(a.objectives, b.objectives);
}

std::vector<int> nondominated_indices(const std::vector<std::array<double, 3>>& objs) {
    std::vector<int> out;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < objs.size() && !dominated; ++j)
            dominated = j != i && dominates(objs[j], objs[i]);
        if (!dominated) out.push_back(static_cast<int>(i));
    }
    return out;
}

namespace {

// Uniform in [0,1) from raw engine bits, independent of the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }

private:
    std::mt19937_64 eng_;
};

std::vector<std::vector<int>> sort_fronts(const std::vector<Individual>& pop) {
    const int n = static_cast<int>(pop.size());
    std::vector<std::vector<int>> dominated(n);
    std::vector<int> count(n, 0);
    std::vector<std::vector<int>> fronts(1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (constrained_dominates(pop[i], pop[j])) dominated[i].push_back(j);
            else if (constrained_dominates(pop[j], pop[i])) ++count[i];
        }
        if (count[i] == 0) fronts[0].push_back(i);
    }
    for (std::size_t f = 0; !fronts[f].empty(); ++f) {
        std::vector<int> next;
        for (int i : fronts[f])
            for (int j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(next);
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding(const std::vector<Individual>& pop, const std::vector<int>& front) {
    const std::size_t n = front.size();
    std::vector<double> d(n, 0.0);
    if (n <= 2) {
        std::fill(d.begin(), d.end(), std::numeric_limits<double>::infinity());
        return d;
    }
    std::vector<std::size_t> ord(n);
    for (int m = 0; m < 3; ++m) {
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            return pop[front[a]].objectives[m] < pop[front[b]].objectives[m];
        });
        const double lo = pop[front[ord.front()]].objectives[m];
        const double hi = pop[front[ord.back()]].objectives[m];
        d[ord.front()] = d[ord.back()] = std::numeric_limits<double>::infinity();
        if (!(hi > lo)) continue;
        for (std::size_t k = 1; k + 1 < n; ++k)
            d[ord[k]] += (pop[front[ord[k + 1]]].objectives[m] - pop[front[ord[k - 1]]].objectives[m]) / (hi - lo);
    }
    return d;
}

void sbx(DesignVector& a, DesignVector& b, const OptProblem& p, const GaSettings& s, Rng& rng) {
    for (int i = 0; i < 4; ++i) {
        const double u = rng.uniform();
        if (rng.uniform() > 0.5 || std::abs(a[i] - b[i]) < 1e-14) continue;
        const double y1 = std::min(a[i], b[i]), y2 = std::max(a[i], b[i]);
        const double lo = p.lower[i], hi = p.upper[i];
        const double ec = s.eta_crossover;
        auto betaq = [&](double beta) {
            const double alpha = 2.0 - std::pow(beta, -(ec + 1.0));
            return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (ec + 1.0))
                                    : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (ec + 1.0));
        };
        const double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - lo) / (y2 - y1)) * (y2 - y1));
        const double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (hi - y2) / (y2 - y1)) * (y2 - y1));
        a[i] = std::clamp(c1, lo, hi);
        b[i] = std::clamp(c2, lo, hi);
    }
}

void mutate(DesignVector& x, const OptProblem& p, const GaSettings& s, Rng& rng) {
    for (int i = 0; i < 4; ++i) {
        if (rng.uniform() >= s.mutation_probability) continue;
        const double lo = p.lower[i], hi = p.upper[i], span = hi - lo;
        const double d1 = (x[i] - lo) / span, d2 = (hi - x[i]) / span;
        const double u = rng.uniform();
        const double em = s.eta_mutation + 1.0;
        double dq;
        if (u < 0.5) {
            const double v = 2 * u + (1 - 2 * u) * std::pow(1 - d1, em);
            dq = std::pow(v, 1.0 / em) - 1.0;
        } else {
            const double v = 2 * (1 - u) + 2 * (u - 0.5) * std::pow(1 - d2, em);
            dq = 1.0 - std::pow(v, 1.0 / em);
        }
        x[i] = std::clamp(x[i] + dq * span, lo, hi);
    }
}

ViolationStats violation_stats(const std::vector<Individual>& pop) {
    ViolationStats st;
    st.min_total = std::numeric_limits<double>::infinity();
    std::array<std::size_t, 4> count{};
    for (const auto& ind : pop) {
        const double v = ind.total_violation();
        st.min_total = std::min(st.min_total, v);
        st.mean_total += v / pop.size();
        for (int c = 0; c < 4; ++c)
            if (ind.violations[c] > 0) ++count[c];
    }
    for (int c = 0; c < 4; ++c) st.violated_fraction[c] = double(count[c]) / pop.size();
    return st;
}

}  // namespace

ParetoFront optimize(const OptProblem& p, const GaSettings& s) {
    p.validate();
    s.validate();
    Rng rng(s.seed);
    const int n = s.population;
    ParetoFront out;

    std::vector<Individual> pop;
    pop.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        DesignVector x;
        for (int v = 0; v < 4; ++v) x[v] = p.lower[v] + rng.uniform() * (p.upper[v] - p.lower[v]);
        pop.push_back(evaluate(p, x));
    }
    out.evaluations = n;

    std::vector<int> rank(n, 0);
    std::vector<double> crowd(n, 0.0);
    auto assign = [&](const std::vector<Individual>& population) {
        const auto fronts = sort_fronts(population);
        rank.assign(population.size(), 0);
        crowd.assign(population.size(), 0.0);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            const auto d = crowding(population, fronts[f]);
            for (std::size_t k = 0; k < fronts[f].size(); ++k) {
                rank[fronts[f][k]] = static_cast<int>(f);
                crowd[fronts[f][k]] = d[k];
            }
        }
        return fronts;
    };
    assign(pop);

    auto tournament = [&]() -> const Individual& {
        const std::size_t a = rng.index(n), b = rng.index(n);
        if (rank[a] != rank[b]) return rank[a] < rank[b] ? pop[a] : pop[b];
        if (crowd[a] != crowd[b]) return crowd[a] > crowd[b] ? pop[a] : pop[b];
        return pop[std::min(a, b)];
    };

    for (int gen = 0; gen < s.generations; ++gen) {
        std::vector<DesignVector> children;
        while (static_cast<int>(children.size()) < n) {
            DesignVector c1 = tournament().par, c2 = tournament().par;
            if (rng.uniform() < s.crossover_probability) sbx(c1, c2, p, s, rng);
            mutate(c1, p, s, rng);
            mutate(c2, p, s, rng);
            children.push_back(c1);
            children.push_back(c2);
        }
        // Evaluation is pure, so it may be reordered freely; merging stays in index order.
        for (const auto& c : children) pop.push_back(evaluate(p, c));
        out.evaluations += n;

        const auto fronts = sort_fronts(pop);
        std::vector<Individual> next;
        next.reserve(2 * n);
        for (const auto& f : fronts) {
            if (static_cast<int>(next.size() + f.size()) <= n) {
                for (int i : f) next.push_back(pop[i]);
                continue;
            }
            const auto d = crowding(pop, f);
            std::vector<std::size_t> ord(f.size());
            std::iota(ord.begin(), ord.end(), 0);
            std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
            for (std::size_t k = 0; static_cast<int>(next.size()) < n; ++k) next.push_back(pop[f[ord[k]]]);
            break;
        }
        pop = std::move(next);
        assign(pop);
    }

    out.final_population = violation_stats(pop);
    std::vector<Individual> feasible;
    for (const auto& ind : pop)
        if (ind.feasible) {
            bool dup = false;
            for (const auto& f : feasible) dup = dup || f.par == ind.par;
            if (!dup) feasible.push_back(ind);
        }
    std::vector<std::array<double, 3>> objs;
    for (const auto& f : feasible) objs.push_back(f.objectives);
    for (int i : nondominated_indices(objs)) out.members.push_back(feasible[i]);
    std::stable_sort(out.members.begin(), out.members.end(),
                     [](const Individual& a, const Individual& b) { return a.objectives[0] < b.objectives[0]; });
    return out;
}

DesignVector round_for_machining(const DesignVector& par) {
    DesignVector r = par;
    r[0] = std::round(par[0] * 100.0) / 100.0;
    r[2] = std::round(par[2] * 100.0) / 100.0;
    r[1] = std::round(par[1] * 10.0) / 10.0;
    r[3] = std::round(par[3] * 10.0) / 10.0;
    return r;
}

Selection select_design(const OptProblem& p, const ParetoFront& front, const SelectionPolicy& policy) {
    if (front.members.empty()) throw DomainError("cannot select from an empty front");
    const double ed = p.eta_decoupler_min * (1.0 + policy.slack);
    const double eg = p.eta_guider_min * (1.0 + policy.slack);
    std::vector<const Individual*> order;
    for (const auto& m : front.members) order.push_back(&m);
    std::stable_sort(order.begin(), order.end(),
                     [](const Individual* a, const Individual* b) { return a->objectives[0] > b->objectives[0]; });

    // Rounding can push a boundary design over the ceiling, so judge the rounded design.
    Selection sel;
    for (const Individual* m : order) {
        if (m->objectives[1] < ed || m->objectives[2] < eg) continue;
        Individual r = evaluate(p, round_for_machining(m->par));
        if (r.feasible && r.objectives[1] >= ed && r.objectives[2] >= eg) {
            sel.par = r.par;
            sel.evaluated = r;
            sel.slack_satisfied = true;
            return sel;
        }
    }
    // Fall back to the member with the largest worst-case eta margin.
    double margin = -std::numeric_limits<double>::infinity();
    const Individual* best = order.front();
    for (const Individual* m : order) {
        const double mm = std::min(m->objectives[1] / p.eta_decoupler_min, m->objectives[2] / p.eta_guider_min);
        if (mm > margin) {
            margin = mm;
            best = m;
        }
    }
    sel.par = round_for_machining(best->par);
    sel.evaluated = evaluate(p, sel.par);
    return sel;
}

std::string front_csv(const ParetoFront& f) {
    std::string out = "t_g_mm,l_g_mm,t_d_mm,l_d_mm,k_axis,eta_d,eta_g,feasible\n";
    char buf[256];
    for (const auto& m : f.members) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", m.par[0], m.par[1], m.par[2],
                      m.par[3], m.objectives[0], m.objectives[1], m.objectives[2], m.feasible ? 1 : 0);
        out += buf;
    }
    return out;
}

}  // namespace flexstage
