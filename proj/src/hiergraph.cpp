#include "rdelab/hiergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "rdelab/parallel.hpp"

namespace rdelab {

// ---------------------------------------------------------------- graph

HierGraph::HierGraph(int vertex_count, std::vector<std::pair<int, int>> edges, int source, int sink)
    : n_(vertex_count), edges_(std::move(edges)), src_(source), dst_(sink) {
    if (n_ < 2 || src_ < 0 || dst_ < 0 || src_ >= n_ || dst_ >= n_ || src_ == dst_)
        throw std::invalid_argument("bad terminals");
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n_));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        auto [u, v] = edges_[e];
        if (u < 0 || v < 0 || u >= n_ || v >= n_ || u == v) throw std::invalid_argument("bad edge");
        out[static_cast<std::size_t>(u)].push_back(static_cast<int>(e));
    }
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::vector<int> stack;
    std::function<void(int)> dfs = [&](int u) {
        if (u == dst_) {
            paths_.push_back(stack);
            return;
        }
        seen[static_cast<std::size_t>(u)] = 1;
        for (int e : out[static_cast<std::size_t>(u)]) {
            const int v = edges_[static_cast<std::size_t>(e)].second;
            if (seen[static_cast<std::size_t>(v)]) continue;
            stack.push_back(e);
            dfs(v);
            stack.pop_back();
        }
        seen[static_cast<std::size_t>(u)] = 0;
    };
    dfs(src_);
    if (paths_.empty()) throw std::invalid_argument("no I->O path");
    std::vector<char> used(edges_.size(), 0);
    for (const auto& p : paths_)
        for (int e : p) used[static_cast<std::size_t>(e)] = 1;
    for (std::size_t e = 0; e < edges_.size(); ++e)
        if (!used[e]) throw std::invalid_argument("edge " + std::to_string(e) + " lies on no I->O path");
}

HierGraph HierGraph::diamond() { return HierGraph(4, {{0, 1}, {1, 3}, {0, 2}, {2, 3}}, 0, 3); }

// handle I->1 is a bridge; the head is the loop 1->2->3, 1->3
HierGraph HierGraph::racket() { return HierGraph(4, {{0, 1}, {1, 2}, {2, 3}, {1, 3}}, 0, 3); }

HierGraph HierGraph::single_edge() { return HierGraph(2, {{0, 1}}, 0, 1); }

HierGraph HierGraph::from_json(const Json& j) {
    std::vector<std::pair<int, int>> e;
    for (const auto& p : j.at("edges")) e.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    return HierGraph(j.at("vertices").get<int>(), std::move(e), j.at("I").get<int>(), j.at("O").get<int>());
}

HierGraph HierGraph::builtin_or_file(const std::string& s) {
    if (s == "diamond") return diamond();
    if (s == "racket") return racket();
    if (s == "edge") return single_edge();
    std::ifstream f(s);
    if (!f) throw std::invalid_argument("unknown graph: " + s);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(Json::parse(ss.str()));
}

Json HierGraph::to_json() const {
    Json j;
    j["vertices"] = n_;
    Json e = Json::array();
    for (auto [u, v] : edges_) e.push_back({u, v});
    j["edges"] = e;
    j["I"] = src_;
    j["O"] = dst_;
    return j;
}

bool HierGraph::nonpivotal() const { return validate_nonpivotal(*this); }

bool validate_nonpivotal(const HierGraph& g) {
    for (auto [u, v] : g.edges())
        if (u == g.source() && v == g.sink()) return false;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        bool everywhere = true;
        for (const auto& p : g.io_paths())
            if (std::find(p.begin(), p.end(), static_cast<int>(e)) == p.end()) {
                everywhere = false;
                break;
            }
        if (everywhere) return false;
    }
    return true;
}

namespace {

std::vector<std::uint32_t> path_masks(const HierGraph& g) {
    if (g.edge_count() > 24) throw TooLarge("percolation enumeration limited to 24 edges");
    std::vector<std::uint32_t> m;
    for (const auto& p : g.io_paths()) {
        std::uint32_t b = 0;
        for (int e : p) b |= 1u << e;
        m.push_back(b);
    }
    return m;
}

bool connects(std::uint32_t s, const std::vector<std::uint32_t>& masks) {
    for (auto m : masks)
        if ((m & ~s) == 0) return true;
    return false;
}

}  // namespace

double percolation_theta(const HierGraph& g, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p outside [0,1]");
    const auto masks = path_masks(g);
    const int E = static_cast<int>(g.edge_count());
    // sum over open-edge counts: theta = sum_k c_k p^k (1-p)^(E-k)
    std::vector<double> count(static_cast<std::size_t>(E) + 1, 0.0);
    for (std::uint32_t s = 0; s < (1u << E); ++s)
        if (connects(s, masks)) count[static_cast<std::size_t>(__builtin_popcount(s))] += 1.0;
    double t = 0.0;
    for (int k = 0; k <= E; ++k)
        if (count[static_cast<std::size_t>(k)] > 0.0)
            t += count[static_cast<std::size_t>(k)] * std::pow(p, k) * std::pow(1.0 - p, E - k);
    return t;
}

std::uint64_t percolation_connecting_subsets(const HierGraph& g) {
    const auto masks = path_masks(g);
    std::uint64_t c = 0;
    for (std::uint32_t s = 0; s < (1u << g.edge_count()); ++s)
        if (connects(s, masks)) ++c;
    return c;
}

double relation_R(const HierGraph& g, const std::vector<double>& xs, double xi_log) {
    double best = kInf;
    for (const auto& p : g.io_paths()) {
        double m = -kInf;
        bool inf = false;
        for (int e : p) {
            const double v = xs[static_cast<std::size_t>(e)];
            if (v == kInf) inf = true;
            m = std::max(m, v);
        }
        if (inf) continue;
        double len;
        if (m == -kInf) {
            len = -kInf;
        } else {
            double s = 0.0;
            for (int e : p) s += std::exp(xs[static_cast<std::size_t>(e)] - m);
            len = m + std::log(s);
        }
        best = std::min(best, len);
    }
    return best + xi_log;
}

// ---------------------------------------------------------------- SP decomposition

SpNode sp_decompose(const HierGraph& g) {
    struct E {
        int u, v;
        SpNode node;
        bool alive = true;
    };
    std::vector<E> es;
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
        SpNode leaf;
        leaf.kind = SpNode::Edge;
        leaf.edge = static_cast<int>(i);
        es.push_back({g.edges()[i].first, g.edges()[i].second, leaf});
    }
    auto join = [](SpNode::Kind k, SpNode a, SpNode b) {
        SpNode n;
        n.kind = k;
        for (SpNode* x : {&a, &b}) {
            if (x->kind == k)
                for (auto& c : x->kids) n.kids.push_back(std::move(c));
            else
                n.kids.push_back(std::move(*x));
        }
        return n;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < es.size() && !changed; ++i) {
            if (!es[i].alive) continue;
            for (std::size_t j = i + 1; j < es.size(); ++j) {
                if (!es[j].alive || es[j].u != es[i].u || es[j].v != es[i].v) continue;
                es[i].node = join(SpNode::Parallel, std::move(es[i].node), std::move(es[j].node));
                es[j].alive = false;
                changed = true;
                break;
            }
        }
        if (changed) continue;
        for (int v = 0; v < g.vertex_count() && !changed; ++v) {
            if (v == g.source() || v == g.sink()) continue;
            int in = -1, out = -1, nin = 0, nout = 0;
            for (std::size_t i = 0; i < es.size(); ++i) {
                if (!es[i].alive) continue;
                if (es[i].v == v) in = static_cast<int>(i), ++nin;
                if (es[i].u == v) out = static_cast<int>(i), ++nout;
            }
            if (nin != 1 || nout != 1) continue;
            auto& a = es[static_cast<std::size_t>(in)];
            auto& b = es[static_cast<std::size_t>(out)];
            a.node = join(SpNode::Series, std::move(a.node), std::move(b.node));
            a.v = b.v;
            b.alive = false;
            changed = true;
        }
    }
    std::vector<const E*> left;
    for (const auto& e : es)
        if (e.alive) left.push_back(&e);
    if (left.size() == 1 && left[0]->u == g.source() && left[0]->v == g.sink()) return left[0]->node;
    return SpNode{};
}

// ---------------------------------------------------------------- law kernels

namespace {

struct Trim {
    std::size_t a, b;
};

Trim trimmed(const std::vector<double>& p) {
    // drop end stretches carrying < 1e-20 of the mass; they cannot move any
    // reported quantity but dominate the pair loop
    double tot = 0.0;
    for (double v : p) tot += v;
    const double eps = tot * 1e-20;
    std::size_t a = 0, b = p.size();
    for (double acc = 0.0; a < b && acc + p[a] <= eps; ++a) acc += p[a];
    for (double acc = 0.0; b > a && acc + p[b - 1] <= eps; --b) acc += p[b - 1];
    return {a, b};
}

// offset table: log1p(exp(-d h)) / h split into integer and fractional parts
struct LseOffsets {
    std::vector<long> fl;
    std::vector<double> t;
};

LseOffsets lse_offsets(std::size_t dmax, double h) {
    LseOffsets o;
    o.fl.resize(dmax + 1);
    o.t.resize(dmax + 1);
    for (std::size_t d = 0; d <= dmax; ++d) {
        const double off = std::log1p(std::exp(-static_cast<double>(d) * h)) / h;
        const double f = std::floor(off);
        o.fl[d] = static_cast<long>(f);
        o.t[d] = off - f;
    }
    return o;
}

// pair contributions for i in [i0, i1) into acc; returns overflow mass above the window
double lse_rows(const std::vector<double>& pp, const std::vector<double>& qq, Trim tp, Trim tq, const LseOffsets& off,
                std::size_t i0, std::size_t i1, std::vector<double>& acc) {
    const long last = static_cast<long>(acc.size()) - 1;
    double over = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        const double pi = pp[i];
        if (pi == 0.0) continue;
        for (std::size_t j = tq.a; j < tq.b; ++j) {
            const double m = pi * qq[j];
            if (m == 0.0) continue;
            const std::size_t d = i > j ? i - j : j - i;
            const long base = static_cast<long>(std::max(i, j)) + off.fl[d];
            const double t = off.t[d];
            if (base >= last) {
                if (base == last && t == 0.0)
                    acc[static_cast<std::size_t>(last)] += m;
                else if (base == last) {
                    acc[static_cast<std::size_t>(last)] += m * (1.0 - t);
                    over += m * t;
                } else {
                    over += m;
                }
                continue;
            }
            acc[static_cast<std::size_t>(base)] += m * (1.0 - t);
            acc[static_cast<std::size_t>(base) + 1] += m * t;
        }
    }
    (void)tp;
    return over;
}

GridMeasure lse_finish(const GridMeasure& p, const GridMeasure& q, std::vector<double> acc, double over) {
    const auto pp = p.pmf();
    const auto qq = q.pmf();
    const double pn = p.atom_neg_inf(), qn = q.atom_neg_inf();
    // -inf on one side leaves the other value unchanged
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += pn * qq[i] + qn * pp[i];
    const double pos = 1.0 - (1.0 - p.atom_pos_inf()) * (1.0 - q.atom_pos_inf()) + over;
    return GridMeasure::from_pmf(p.grid(), std::move(acc), pn * qn, pos);
}

}  // namespace

GridMeasure lse_law_serial(const GridMeasure& p, const GridMeasure& q) {
    check_same_grid(p, q);
    const auto pp = p.pmf();
    const auto qq = q.pmf();
    const Trim tp = trimmed(pp), tq = trimmed(qq);
    std::vector<double> acc(pp.size(), 0.0);
    if (tp.a >= tp.b || tq.a >= tq.b) return lse_finish(p, q, std::move(acc), 0.0);
    const std::size_t dmax = std::max(tp.b, tq.b) - std::min(tp.a, tq.a);
    const auto off = lse_offsets(dmax, p.grid().h);
    const double over = lse_rows(pp, qq, tp, tq, off, tp.a, tp.b, acc);
    return lse_finish(p, q, std::move(acc), over);
}

GridMeasure lse_law(const GridMeasure& p, const GridMeasure& q) {
    check_same_grid(p, q);
    const auto pp = p.pmf();
    const auto qq = q.pmf();
    const Trim tp = trimmed(pp), tq = trimmed(qq);
    std::vector<double> acc(pp.size(), 0.0);
    if (tp.a >= tp.b || tq.a >= tq.b) return lse_finish(p, q, std::move(acc), 0.0);
    const std::size_t dmax = std::max(tp.b, tq.b) - std::min(tp.a, tq.a);
    const auto off = lse_offsets(dmax, p.grid().h);
    // fixed row chunks, summed in chunk order: result independent of thread count
    const std::size_t rows = tp.b - tp.a;
    const std::size_t chunks = std::min<std::size_t>(16, std::max<std::size_t>(1, rows / 64));
    std::vector<std::vector<double>> part(chunks);
    std::vector<double> over(chunks, 0.0);
    parallel_for(chunks, [&](std::size_t c) {
        part[c].assign(pp.size(), 0.0);
        const std::size_t i0 = tp.a + rows * c / chunks, i1 = tp.a + rows * (c + 1) / chunks;
        over[c] = lse_rows(pp, qq, tp, tq, off, i0, i1, part[c]);
    });
    double ov = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += part[c][k];
        ov += over[c];
    }
    return lse_finish(p, q, std::move(acc), ov);
}

GridMeasure min_law(const GridMeasure& p, const GridMeasure& q) {
    check_same_grid(p, q);
    std::vector<double> cdf(p.cdf().size());
    for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = 1.0 - (1.0 - p.cdf()[i]) * (1.0 - q.cdf()[i]);
    const double neg = 1.0 - (1.0 - p.atom_neg_inf()) * (1.0 - q.atom_neg_inf());
    const double pos = p.atom_pos_inf() * q.atom_pos_inf();
    for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] = std::max(cdf[i], cdf[i - 1]);
    cdf.back() = 1.0 - pos;
    for (auto& v : cdf) v = std::clamp(v, neg, 1.0 - pos);
    return GridMeasure(p.grid(), std::move(cdf), neg, pos);
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

std::vector<double> gaussian_kernel(double s, double sigma, double h, long* offset) {
    const double mu = s / h;
    if (sigma == 0.0) {
        const double f = std::floor(mu);
        *offset = static_cast<long>(f);
        const double t = mu - f;
        if (t == 0.0) return {1.0};
        return {1.0 - t, t};
    }
    const double tau = sigma / h;
    // E[(Y - t)^+] and E[(t - Y)^+] for Y ~ N(mu, tau^2); the hat weight is the
    // second difference of either one, use whichever is small to avoid cancellation
    auto call = [&](double t) {
        const double z = (mu - t) / tau;
        return (mu - t) * norm_cdf(z) + tau * norm_pdf(z);
    };
    auto put = [&](double t) {
        const double z = (t - mu) / tau;
        return (t - mu) * norm_cdf(z) + tau * norm_pdf(z);
    };
    const long lo = static_cast<long>(std::floor(mu - 9.5 * tau)) - 1;
    const long hi = static_cast<long>(std::ceil(mu + 9.5 * tau)) + 1;
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1));
    double tot = 0.0;
    for (long m = lo; m <= hi; ++m) {
        const double t = static_cast<double>(m);
        double v = t <= mu ? put(t - 1) - 2 * put(t) + put(t + 1) : call(t - 1) - 2 * call(t) + call(t + 1);
        v = std::max(v, 0.0);
        w[static_cast<std::size_t>(m - lo)] = v;
        tot += v;
    }
    for (auto& v : w) v /= tot;
    *offset = lo;
    return w;
}

GridMeasure add_gaussian_serial(const GridMeasure& p, double s, double sigma) {
    long off = 0;
    const auto w = gaussian_kernel(s, sigma, p.grid().h, &off);
    const auto pp = p.pmf();
    const Trim tp = trimmed(pp);
    std::vector<double> out(pp.size(), 0.0);
    double neg = p.atom_neg_inf(), pos = p.atom_pos_inf();
    const long n = static_cast<long>(pp.size());
    for (std::size_t i = tp.a; i < tp.b; ++i) {
        if (pp[i] == 0.0) continue;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const long j = static_cast<long>(i) + off + static_cast<long>(k);
            const double m = pp[i] * w[k];
            if (j < 0)
                neg += m;
            else if (j >= n)
                pos += m;
            else
                out[static_cast<std::size_t>(j)] += m;
        }
    }
    return GridMeasure::from_pmf(p.grid(), std::move(out), neg, pos);
}

GridMeasure add_gaussian(const GridMeasure& p, double s, double sigma) {
    long off = 0;
    const auto w = gaussian_kernel(s, sigma, p.grid().h, &off);
    const auto pp = p.pmf();
    const Trim tp = trimmed(pp);
    const long n = static_cast<long>(pp.size());
    const long W = static_cast<long>(w.size());
    std::vector<double> out(pp.size(), 0.0);
    double neg = p.atom_neg_inf(), pos = p.atom_pos_inf();
    if (tp.a >= tp.b) return GridMeasure::from_pmf(p.grid(), std::move(out), neg, pos);
    const long a = static_cast<long>(tp.a), b = static_cast<long>(tp.b);
    // gather form: out[j] = sum_i p[i] w[j - i - off]
    const long j0 = std::max(0L, a + off), j1 = std::min(n, b + off + W - 1);
    parallel_for(static_cast<std::size_t>(std::max(0L, j1 - j0)), [&](std::size_t jj) {
        const long j = j0 + static_cast<long>(jj);
        const long ilo = std::max(a, j - off - W + 1), ihi = std::min(b - 1, j - off);
        double acc = 0.0;
        for (long i = ilo; i <= ihi; ++i) acc += pp[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j - off - i)];
        out[static_cast<std::size_t>(j)] = acc;
    });
    // mass pushed off either end of the window
    std::vector<double> pre(w.size() + 1, 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) pre[k + 1] = pre[k] + w[k];
    for (long i = a; i < b; ++i) {
        const double m = pp[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        const long below = std::clamp(-(i + off), 0L, W);  // k < below lands at j < 0
        const long above = std::clamp(n - (i + off), 0L, W);  // k >= above lands at j >= n
        neg += m * pre[static_cast<std::size_t>(below)];
        pos += m * (1.0 - pre[static_cast<std::size_t>(above)]);
    }
    return GridMeasure::from_pmf(p.grid(), std::move(out), neg, pos);
}

// ---------------------------------------------------------------- model

HierModel::HierModel(HierGraph g, CascadeParams p, GridSpec grid, Engine e, std::size_t n_samples)
    : graph_(std::move(g)), params_(p), grid_(grid), engine_(e), n_samples_(n_samples), sp_(sp_decompose(graph_)) {
    if (params_.sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (engine_ == Engine::Quadrature && sp_.edge < 0 && sp_.kids.empty()) engine_ = Engine::MonteCarlo;
}

HierModel HierModel::with_drift(double s) const {
    auto p = params_;
    p.drift = s;
    return HierModel(graph_, p, grid_, engine_, n_samples_);
}
HierModel HierModel::with_grid(const GridSpec& g) const { return HierModel(graph_, params_, g, engine_, n_samples_); }
HierModel HierModel::with_engine(Engine e, std::size_t n) const { return HierModel(graph_, params_, grid_, e, n); }

bool HierModel::admissible(const GridMeasure& mu) const {
    return mu.atom_neg_inf() <= params_.alpha && mu.atom_pos_inf() <= params_.alpha;
}

Noise HierModel::sample_noise(std::mt19937_64& rng) const {
    std::normal_distribution<double> n(0.0, 1.0);
    Noise z;
    z.xi = params_.drift + params_.sigma * n(rng);
    return z;
}

Noise HierModel::node_noise(std::uint64_t key) const {
    KeyRng rng(key);
    std::normal_distribution<double> n(0.0, 1.0);
    Noise z;
    z.xi = params_.drift + params_.sigma * n(rng);
    return z;
}

double HierModel::relation(const std::vector<double>& children, const Noise& noise) const {
    return relation_R(graph_, children, noise.xi);
}

namespace {

std::string shape_key(const SpNode& n) {
    if (n.kind == SpNode::Edge) return "e";
    std::string s = n.kind == SpNode::Series ? "S(" : "P(";
    for (const auto& k : n.kids) s += shape_key(k) + ",";
    return s + ")";
}

GridMeasure sp_law(const SpNode& n, const GridMeasure& mu, std::map<std::string, GridMeasure>& memo) {
    if (n.kind == SpNode::Edge) return mu;
    const auto key = shape_key(n);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    GridMeasure acc = sp_law(n.kids[0], mu, memo);
    for (std::size_t i = 1; i < n.kids.size(); ++i) {
        const GridMeasure k = sp_law(n.kids[i], mu, memo);
        acc = n.kind == SpNode::Series ? lse_law(acc, k) : min_law(acc, k);
    }
    memo.emplace(key, acc);
    return acc;
}

}  // namespace

GridMeasure HierModel::quadrature(const GridMeasure& mu) const {
    std::map<std::string, GridMeasure> memo;
    const GridMeasure law = sp_law(sp_, mu, memo);
    return add_gaussian(law, params_.drift, params_.sigma);
}

GridMeasure HierModel::pushforward(const GridMeasure& mu, double cutoff, std::uint64_t seed) const {
    if (!(mu.grid() == grid_)) throw GridMismatch();
    if (cutoff < grid_.lo) throw DegenerateCutoff("cut-off below the grid window");
    if (engine_ == Engine::MonteCarlo) return pushforward_mc(graph_, params_, mu, cutoff, n_samples_, seed);
    return clamp_above(quadrature(mu), cutoff);
}

namespace {

double draw(const GridMeasure& mu, double u) {
    if (u < mu.atom_neg_inf()) return -kInf;
    const auto& c = mu.cdf();
    if (u >= c.back()) return kInf;
    const auto it = std::upper_bound(c.begin(), c.end(), u);
    return mu.grid().x(static_cast<std::size_t>(it - c.begin()));
}

constexpr std::size_t kChunk = 1 << 15;

}  // namespace

GridMeasure pushforward_mc(const HierGraph& g, const CascadeParams& p, const GridMeasure& mu, double cutoff,
                           std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
    std::vector<double> out(n_samples);
    const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        std::mt19937_64 rng(mix_seed(seed, c));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::normal_distribution<double> Z(0.0, 1.0);
        std::vector<double> xs(g.edge_count());
        const std::size_t end = std::min(n_samples, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            for (auto& x : xs) x = draw(mu, U(rng));
            const double xi = p.drift + p.sigma * Z(rng);
            out[i] = std::min(relation_R(g, xs, xi), cutoff);
        }
    });
    return from_samples(out, mu.grid());
}

// ---------------------------------------------------------------- drift

DriftSearch find_critical_drift(const HierGraph& g, double sigma, std::pair<double, double> bracket, double a,
                                double tol_s, std::uint64_t seed, double h, double window) {
    if (!(bracket.first < bracket.second)) throw BadBracket("need s_lo < s_hi");
    const GridSpec grid(a - window, a + 1.0, h);
    const HierModel base(g, CascadeParams{sigma, bracket.first, 0.05}, grid);
    const double margin = 5.0 * h;
    // a slower wave than tol/10 per step is indistinguishable from a stationary one
    const double tol = 0.1 * tol_s;
    const int max_iter = static_cast<int>(std::ceil(4.0 * (window + 1.0) / tol)) + 100;
    DriftSearch out;
    auto nontrivial = [&](double s) {
        const auto m = base.with_drift(s);
        const auto r = stationary_cutoff(m, a, tol, max_iter, seed);
        const bool v = r.limit.quantile(0.5) > grid.lo + margin;
        out.trace.emplace_back(s, v);
        return v;
    };
    double lo = bracket.first, hi = bracket.second;
    if (nontrivial(lo) || !nontrivial(hi)) throw BadBracket("bracket does not straddle the transition");
    while (hi - lo > tol_s) {
        const double mid = 0.5 * (lo + hi);
        (nontrivial(mid) ? hi : lo) = mid;
        ++out.bisections;
    }
    out.lo = lo;
    out.hi = hi;
    out.s_cr = 0.5 * (lo + hi);
    return out;
}

namespace {

// iterate the drift-s operator with integer recentering; returns the wave speed
double wave_speed(const HierModel& m, GridMeasure& mu, double tol, int max_iter, int* iters) {
    double prev = kInf, v = 0.0;
    for (int n = 0; n < max_iter; ++n) {
        const GridMeasure next = m.pushforward(mu, kInf, 0);
        v = next.finite_mean() - mu.finite_mean();
        mu = translate(next, -next.quantile(0.5), 1.0);
        if (iters) ++*iters;
        if (std::abs(v - prev) < tol) break;
        prev = v;
    }
    return v;
}

}  // namespace

WaveCalibration calibrate_drift(const HierGraph& g, double sigma, const GridSpec& grid, double tol, int max_iter) {
    WaveCalibration out;
    HierModel m(g, CascadeParams{sigma, 0.0, 0.05}, grid);
    GridMeasure mu = dirac(0.0, grid);
    double s = -wave_speed(m, mu, tol, max_iter, &out.iterations);
    // the binned noise kernel depends slightly on frac(s/h); re-solve at the actual drift
    for (int k = 0; k < 6; ++k) {
        const double v = wave_speed(m.with_drift(s), mu, tol, max_iter, &out.iterations);
        out.speed_change = v;
        s -= v;
        if (std::abs(v) < 1e-14) break;
    }
    out.s_cr = s;
    const auto ms = m.with_drift(s);
    for (int k = 0; k < 20; ++k) mu = ms.pushforward(mu, kInf, 0);
    out.mu_bar = translate(mu, -mu.quantile(0.5), 1.0);
    return out;
}

// ---------------------------------------------------------------- cascade

CascadeSample simulate_cascade_values(const HierGraph& g, const CascadeParams& p, int level, std::size_t n_samples,
                                      std::uint64_t seed, double exact_budget) {
    if (level < 0) throw std::invalid_argument("level must be >= 0");
    CascadeSample out;
    out.values.assign(n_samples, 0.0);
    if (level == 0) return out;
    const double E = static_cast<double>(g.edge_count());
    const double work = std::pow(E, level) * static_cast<double>(n_samples);
    const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
    if (work <= exact_budget) {
        parallel_for(chunks, [&](std::size_t c) {
            std::mt19937_64 rng(mix_seed(seed, c));
            std::normal_distribution<double> Z(0.0, 1.0);
            std::function<double(int)> rec = [&](int n) -> double {
                if (n == 0) return 0.0;
                std::vector<double> xs(g.edge_count());
                for (auto& x : xs) x = rec(n - 1);
                return relation_R(g, xs, p.drift + p.sigma * Z(rng));
            };
            const std::size_t end = std::min(n_samples, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) out.values[i] = rec(level);
        });
        return out;
    }
    // level-by-level: children of a level-n edge are drawn from the level n-1 pool
    out.population = true;
    std::vector<double> prev(n_samples, 0.0);
    for (int n = 1; n <= level; ++n) {
        std::vector<double> next(n_samples);
        parallel_for(chunks, [&](std::size_t c) {
            std::mt19937_64 rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(n)), c));
            std::uniform_int_distribution<std::size_t> pick(0, n_samples - 1);
            std::normal_distribution<double> Z(0.0, 1.0);
            std::vector<double> xs(g.edge_count());
            const std::size_t end = std::min(n_samples, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                for (auto& x : xs) x = prev[pick(rng)];
                next[i] = relation_R(g, xs, p.drift + p.sigma * Z(rng));
            }
        });
        prev.swap(next);
    }
    out.values = std::move(prev);
    return out;
}

GridMeasure simulate_cascade(const HierGraph& g, const CascadeParams& p, int level, std::size_t n_samples,
                             std::uint64_t seed, const GridSpec& grid) {
    return from_samples(simulate_cascade_values(g, p, level, n_samples, seed).values, grid);
}

}  // namespace rdelab
