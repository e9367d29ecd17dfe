#include "rdelab/endogeny.hpp"

#include <algorithm>
#include <cmath>

#include "rdelab/cavity.hpp"
#include "rdelab/hiergraph.hpp"
#include "rdelab/parallel.hpp"

namespace rdelab {

int levels_per_step(const RdeModel& m) { return m.orientation() == Orientation::TwoStepIncreasing ? 2 : 1; }

// ---------------------------------------------------------------- noise tree

NoiseTree::NoiseTree(const RdeModel& m, std::uint64_t seed, int depth) : model_(&m), seed_(seed), depth_(depth) {
    if (depth < 0) throw std::invalid_argument("negative tree depth");
}

Noise NoiseTree::noise(std::uint64_t key) const { return model_->node_noise(key); }

double NoiseTree::uniform(std::uint64_t key, int stream) {
    const std::uint64_t z = mix_seed(key ^ 0x6a09e667f3bcc909ULL, static_cast<std::uint64_t>(stream));
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

double mean_branching(const RdeModel& m) {
    if (m.arity() > 0) return m.arity();
    if (const auto* c = dynamic_cast<const CavityModel*>(&m))
        return std::pow(c->truncation(), c->params().q) / c->params().q;
    return 1.0;
}

}  // namespace

double NoiseTree::expected_nodes() const {
    const double b = mean_branching(*model_);
    double total = 0.0, level = 1.0;
    for (int d = 0; d <= depth_; ++d) {
        total += level;
        level *= b;
    }
    return total;
}

NoiseTree sample_noise_tree(const RdeModel& m, int depth, std::uint64_t seed, double node_budget) {
    NoiseTree t(m, seed, depth);
    if (t.expected_nodes() > node_budget) throw TooLarge("noise tree of depth " + std::to_string(depth) + " too large");
    return t;
}

std::vector<double> level_cuts(const RdeModel& m, const std::vector<double>& a, int k) {
    if (k < 0 || static_cast<std::size_t>(k) > a.size()) throw ScheduleTooShort("schedule shorter than k");
    const int lps = levels_per_step(m);
    std::vector<double> cut(static_cast<std::size_t>(k * lps), kInf);
    for (int n = 0; n < k; ++n) cut[static_cast<std::size_t>(n * lps)] = a[static_cast<std::size_t>(n)];
    return cut;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct Walker {
    const NoiseTree& t;
    const TreeEval& e;
    std::size_t visited = 0;
    std::vector<double> upper;  // bound on node values per level

    Walker(const NoiseTree& t_, const TreeEval& e_) : t(t_), e(e_) {
        if (e.boundary_depth > t.depth()) throw std::invalid_argument("boundary below the tree depth");
        upper.assign(static_cast<std::size_t>(e.boundary_depth) + 1, kInf);
        if (e.boundary.law) {
            const auto hi = e.boundary.law->support(0.0).second;
            upper.back() = e.boundary.law->atom_pos_inf() > 0.0 || hi == 0 ? kInf : e.boundary.law->grid().x(hi - 1);
        }
        // a node without children is +inf before its cut-off
        for (int d = e.boundary_depth - 1; d >= 0; --d) upper[static_cast<std::size_t>(d)] = cut(d);
    }

    double cut(int d) const {
        return static_cast<std::size_t>(d) < e.cut.size() ? e.cut[static_cast<std::size_t>(d)] : kInf;
    }

    void tick() {
        if (static_cast<double>(++visited) > e.node_budget) throw TooLarge("tree evaluation exceeded node budget");
    }

    double leaf(std::uint64_t key) const {
        if (!e.boundary.law) return kInf;
        return e.boundary.law->quantile(NoiseTree::uniform(key, e.boundary.stream));
    }

    double full(std::uint64_t key, int d) {
        tick();
        if (d == e.boundary_depth) return leaf(key);
        const Noise z = t.noise(key);
        const int ar = t.model().arity();
        const std::size_t n = ar > 0 ? static_cast<std::size_t>(ar) : z.points.size();
        std::vector<double> ch(n);
        for (std::size_t i = 0; i < n; ++i) ch[i] = full(NoiseTree::child(key, i), d + 1);
        return std::min(t.model().relation(ch, z), cut(d));
    }

    // V = min(cut, min_i xi_i - V_i). Returns V when lo < V < hi, otherwise a
    // value on the same side of the window.
    double window(std::uint64_t key, int d, double lo, double hi) {
        tick();
        if (d == e.boundary_depth) return leaf(key);
        double best = cut(d);
        if (best <= lo) return best;
        auto ps = static_cast<const CavityModel&>(t.model()).points(key);
        const double u = upper[static_cast<std::size_t>(d) + 1];
        double xi;
        for (std::size_t i = 0; ps.next(xi); ++i) {
            const double cap = std::min(best, hi);
            // points are sorted, so no later child can go below cap either
            if (xi - u >= cap) break;
            const double r = window(NoiseTree::child(key, i), d + 1, xi - cap, xi - lo);
            if (r >= xi - lo) return xi - r;
            if (r > xi - cap) best = xi - r;
        }
        return best;
    }
};

bool prunable(const RdeModel& m) {
    const auto* c = dynamic_cast<const CavityModel*>(&m);
    return c && c->params().k == 1;
}

}  // namespace

double eval_tree_full(const NoiseTree& t, const TreeEval& e, std::size_t* visited) {
    Walker w(t, e);
    const double v = w.full(t.root(), 0);
    if (visited) *visited = w.visited;
    return v;
}

double eval_tree(const NoiseTree& t, const TreeEval& e, std::size_t* visited) {
    if (!prunable(t.model())) return eval_tree_full(t, e, visited);
    Walker w(t, e);
    const double v = w.window(t.root(), 0, -kInf, kInf);
    if (visited) *visited = w.visited;
    return v;
}

namespace {

double cutoff_value(const NoiseTree& t, const std::vector<double>& a, int k) {
    TreeEval e;
    e.boundary_depth = k * levels_per_step(t.model());
    e.cut = level_cuts(t.model(), a, k);
    return eval_tree(t, e);
}

}  // namespace

RtpEvaluation eval_cutoff_rtp(const NoiseTree& t, const std::vector<double>& a, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > a.size()) throw ScheduleTooShort("schedule shorter than k");
    RtpEvaluation r;
    for (int j = 1; j <= k; ++j) r.trace.push_back(cutoff_value(t, a, j));
    r.root_value = r.trace.back();
    return r;
}

RtpEvaluation eval_removed(const NoiseTree& t, const std::vector<double>& a, std::size_t l, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > a.size()) throw ScheduleTooShort("schedule shorter than k");
    RtpEvaluation r;
    for (std::size_t j = 0; j <= l; ++j) r.trace.push_back(cutoff_value(t, CutoffSchedule::removed(a, j), k));
    r.root_value = r.trace.back();
    return r;
}

// ---------------------------------------------------------------- statistics

GapStats gap_stats(std::vector<double> gaps) {
    GapStats s;
    if (gaps.empty()) return s;
    for (auto& g : gaps) {
        if (!std::isfinite(g)) {
            ++s.non_finite;
            g = kInf;
        }
    }
    std::sort(gaps.begin(), gaps.end());
    double sum = 0.0;
    for (double g : gaps) sum += g;
    const std::size_t n = gaps.size();
    s.mean = sum / static_cast<double>(n);
    s.median = n % 2 ? gaps[n / 2] : 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
    s.p95 = gaps[std::min(n - 1, static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1)];
    s.max = gaps.back();
    return s;
}

Json GapStats::to_json() const {
    return Json{{"mean", real_to_json(mean)},
                {"median", real_to_json(median)},
                {"p95", real_to_json(p95)},
                {"max", real_to_json(max)},
                {"non_finite", non_finite}};
}

double independent_gap(const GridMeasure& mu) {
    const double inf_mass = mu.atom_neg_inf() + mu.atom_pos_inf();
    if (inf_mass > 0.0) return mu.atom_neg_inf() >= 1.0 || mu.atom_pos_inf() >= 1.0 ? 0.0 : kInf;
    // E|X - X'| = 2 int F (1 - F), and F is a step function on the lattice
    const auto& F = mu.cdf();
    double s = 0.0;
    for (double v : F) s += v * (1.0 - v);
    return 2.0 * s * mu.grid().h;
}

// ---------------------------------------------------------------- sandwich

namespace {

struct Config {
    std::size_t l = 0;  // A^(l)
    std::size_t k = 0;
    std::vector<double> cut;
    GridMeasure horizon_law;
};

Config make_config(const RdeModel& m, const std::vector<double>& flat, std::size_t l, std::size_t k, int horizon,
                   std::uint64_t seed) {
    Config c;
    c.l = l;
    c.k = k;
    const auto a = CutoffSchedule::removed(flat, l);
    GridMeasure mu = dirac(kInf, m.grid());
    for (std::size_t n = k; n > static_cast<std::size_t>(horizon); --n) mu = step(m, mu, a[n - 1], mix_seed(seed, n));
    c.horizon_law = std::move(mu);
    c.cut = level_cuts(m, a, horizon);
    return c;
}

double eval_config(const RdeModel& m, const Config& c, std::uint64_t tree_seed, int horizon) {
    const int depth = horizon * levels_per_step(m);
    NoiseTree t(m, tree_seed, depth);
    TreeEval e;
    e.boundary_depth = depth;
    e.cut = c.cut;
    e.boundary.law = &c.horizon_law;
    return eval_tree(t, e);
}

// first subblock length of a block: plain entries up to and including the
// cut-off; a block without cut-offs splits into single entries
std::size_t subblock_len(const Block& b) {
    for (std::size_t i = 0; i < b.entries.size(); ++i)
        if (b.entries[i] != kInf) return i + 1;
    return 1;
}

double dkw(std::size_t n, double conf) { return std::sqrt(std::log(2.0 / conf) / (2.0 * static_cast<double>(n))); }

}  // namespace

Json SandwichReport::to_json() const {
    return Json{{"pass", pass},
                {"gap_pass", gap_pass},
                {"law_pass", law_pass},
                {"rerun_pass", rerun_pass},
                {"k_star", k_star},
                {"l_star", l_star},
                {"subblock_len", sub_len},
                {"frac_within_tol", frac_within},
                {"gaps", gaps.to_json()},
                {"block_gaps", block_gaps.to_json()},
                {"literal_gaps", literal_gaps.to_json()},
                {"dweak_roots", real_to_json(dweak_roots)},
                {"dkw_floor", dkw_floor}};
}

SandwichReport sandwich_test(const RdeModel& m, const GridMeasure& mu_bar, const CutoffSchedule& s,
                             const SandwichParams& p) {
    if (s.blocks.empty()) throw ScheduleTooShort("schedule has no blocks");
    if (p.n_trees < 1) throw std::invalid_argument("n_trees must be positive");
    const auto flat = s.flat();
    const std::size_t K = s.blocks.size();
    const std::size_t sK = flat.size();
    const std::size_t sK1 = sK - s.blocks.back().size();
    const std::size_t sK2 = K >= 2 ? sK1 - s.blocks[K - 2].size() : 0;
    const std::size_t sub = subblock_len(s.blocks.back());
    if (sub >= s.blocks.back().size() || sK - sub < static_cast<std::size_t>(p.horizon))
        throw ScheduleTooShort("last block too short for the subblock comparison");

    SandwichReport r;
    r.k_star = sK;
    r.l_star = sK1 + 1;
    r.sub_len = sub;

    // star, one subblock more removed, one subblock shorter, literal, one block less removed
    const std::vector<std::pair<std::size_t, std::size_t>> lk{
        {r.l_star, sK}, {r.l_star + sub, sK}, {r.l_star, sK - sub}, {0, sK}, {sK2 + 1, sK}};
    std::vector<Config> cfg(lk.size());
    parallel_for(lk.size(), [&](std::size_t i) {
        cfg[i] = make_config(m, flat, lk[i].first, lk[i].second, p.horizon, p.seed);
    });

    const auto n = static_cast<std::size_t>(p.n_trees);
    std::vector<std::vector<double>> x(n, std::vector<double>(lk.size()));
    parallel_for(n, [&](std::size_t i) {
        const std::uint64_t ts = mix_seed(p.seed, 1000 + i);
        for (std::size_t c = 0; c < lk.size(); ++c) x[i][c] = eval_config(m, cfg[c], ts, p.horizon);
    });

    std::vector<double> gap(n), blk(n), lit(n), roots(n);
    std::size_t within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = std::max(std::abs(x[i][1] - x[i][0]), std::abs(x[i][2] - x[i][0]));
        gap[i] = std::isnan(g) ? kInf : g;
        blk[i] = std::abs(x[i][0] - x[i][4]);
        lit[i] = std::abs(x[i][0] - x[i][3]);
        roots[i] = x[i][0];
        if (gap[i] <= p.tol) ++within;
    }
    r.gaps = gap_stats(gap);
    r.block_gaps = gap_stats(blk);
    r.literal_gaps = gap_stats(lit);
    r.frac_within = static_cast<double>(within) / static_cast<double>(n);
    r.gap_pass = r.frac_within >= p.pass_fraction;

    r.dweak_roots = d_weak(from_samples(roots, mu_bar.grid()), mu_bar);
    r.dkw_floor = dkw(n, p.confidence);
    r.law_pass = r.dweak_roots <= p.tol + r.dkw_floor;

    r.rerun_pass = true;
    for (std::size_t i = 0; i < std::min(n, static_cast<std::size_t>(std::max(p.rerun_trees, 0))); ++i) {
        const double v = eval_config(m, cfg[0], mix_seed(p.seed, 1000 + i), p.horizon);
        if (!(v == x[i][0] || (std::isnan(v) && std::isnan(x[i][0])))) r.rerun_pass = false;
    }
    r.pass = r.gap_pass && r.law_pass && r.rerun_pass;
    return r;
}

// ---------------------------------------------------------------- bivariate

Json BivariatePoint::to_json() const {
    return Json{{"depth", depth}, {"gap_stats", gaps.to_json()}, {"dweak_to_mubar", real_to_json(dweak_roots)}};
}

std::vector<BivariatePoint> bivariate_test(const RdeModel& m, const GridMeasure& mu_bar,
                                           const std::vector<int>& depths, int n_trees, std::uint64_t seed) {
    if (n_trees < 1) throw std::invalid_argument("n_trees must be positive");
    std::vector<BivariatePoint> out;
    const auto n = static_cast<std::size_t>(n_trees);
    for (int depth : depths) {
        if (depth < 0) throw std::invalid_argument("negative depth");
        std::vector<double> gap(n), roots(n);
        parallel_for(n, [&](std::size_t i) {
            const NoiseTree t(m, mix_seed(seed, 1000 + i), depth);
            TreeEval e;
            e.boundary_depth = depth;
            e.boundary.law = &mu_bar;
            e.boundary.stream = 1;
            const double x = eval_tree(t, e);
            e.boundary.stream = 2;
            const double y = eval_tree(t, e);
            gap[i] = std::abs(x - y);
            roots[i] = x;
        });
        BivariatePoint bp;
        bp.depth = depth;
        bp.gaps = gap_stats(gap);
        bp.dweak_roots = d_weak(from_samples(roots, mu_bar.grid()), mu_bar);
        out.push_back(bp);
    }
    return out;
}

}  // namespace rdelab
