#include "rdelab/rde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rdelab/parallel.hpp"

namespace rdelab {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finaliser over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Noise RdeModel::node_noise(std::uint64_t key) const {
    std::mt19937_64 rng(key);
    return sample_noise(rng);
}

GridMeasure step(const RdeModel& model, const GridMeasure& mu, double a, std::uint64_t seed) {
    if (model.orientation() == Orientation::Increasing) return model.pushforward(mu, a, seed);
    const GridMeasure once = model.pushforward(mu, kInf, seed);
    return model.pushforward(once, a, mix_seed(seed, 1));
}

// ---------------------------------------------------------------- blocks

Block Block::subblock(const Subblock& s) {
    if (s.ell < 0) throw std::invalid_argument("ell must be >= 0");
    Block b;
    b.entries.assign(static_cast<std::size_t>(s.ell), kInf);
    b.entries.push_back(s.a);
    return b;
}

Block Block::then(const Block& rhs) const {
    Block b = *this;
    b.entries.insert(b.entries.end(), rhs.entries.begin(), rhs.entries.end());
    return b;
}

std::vector<double> CutoffSchedule::flat() const {
    std::vector<double> a;
    for (const auto& b : blocks) a.insert(a.end(), b.entries.begin(), b.entries.end());
    return a;
}

std::vector<double> CutoffSchedule::removed(const std::vector<double>& a, std::size_t l) {
    std::vector<double> r = a;
    for (std::size_t n = 1; n < l && n <= r.size(); ++n) r[n - 1] = kInf;
    return r;
}

Json to_json(const Block& b) {
    Json e = Json::array();
    for (double v : b.entries) e.push_back(real_to_json(v));
    return Json{{"entries", e}};
}

Json to_json(const CutoffSchedule& s) {
    Json j;
    j["blocks"] = Json::array();
    for (const auto& b : s.blocks) j["blocks"].push_back(to_json(b));
    j["deltas"] = s.deltas;
    j["epsilons"] = s.epsilons;
    j["partial_sums"] = s.partial_sums;
    return j;
}

Json to_json(const BlockResult& b) {
    return Json{{"block", to_json(b.block)},
                {"b0", b.b0},
                {"c0", b.c0},
                {"b1", b.b1},
                {"N", b.N},
                {"ell", b.ell},
                {"epsilon_prime", b.epsilon_prime},
                {"epsilon_0", b.epsilon_0},
                {"dweak_top", b.dweak_top},
                {"diagnostics", b.diagnostics}};
}

CutoffSchedule schedule_from_json(const Json& j) {
    CutoffSchedule s;
    for (const auto& b : j.at("blocks")) {
        Block blk;
        for (const auto& v : b.at("entries")) blk.entries.push_back(real_from_json(v));
        if (blk.entries.empty()) throw std::invalid_argument("empty block");
        s.blocks.push_back(std::move(blk));
    }
    if (j.contains("deltas")) s.deltas = j["deltas"].get<std::vector<double>>();
    if (j.contains("epsilons")) s.epsilons = j["epsilons"].get<std::vector<double>>();
    std::size_t acc = 0;
    for (const auto& b : s.blocks) s.partial_sums.push_back(acc += b.size());
    return s;
}

// ---------------------------------------------------------------- iteration

GridMeasure phi(const RdeModel& model, const GridMeasure& mu, int n_iter, std::uint64_t seed) {
    if (n_iter < 0) throw std::invalid_argument("n_iter must be >= 0");
    GridMeasure m = mu;
    for (int i = 0; i < n_iter; ++i) m = model.pushforward(m, kInf, mix_seed(seed, static_cast<std::uint64_t>(i)));
    return m;
}

GridMeasure phi_cut(const RdeModel& model, const GridMeasure& mu, double a, std::uint64_t seed) {
    if (a < model.grid().lo) throw DegenerateCutoff("cut-off below the grid window");
    return step(model, mu, a, seed);
}

GridMeasure phi_block(const RdeModel& model, const GridMeasure& mu, const Block& block, std::uint64_t seed) {
    GridMeasure m = mu;
    for (std::size_t i = block.entries.size(); i-- > 0;)
        m = step(model, m, block.entries[i], mix_seed(seed, i));
    return m;
}

StationaryResult stationary_cutoff(const RdeModel& model, double a, double tol, int max_iter, std::uint64_t seed) {
    if (!std::isfinite(a)) throw std::invalid_argument("cut-off must be finite");
    if (a < model.grid().lo) throw DegenerateCutoff("cut-off below the grid window");
    StationaryResult r;
    r.limit = dirac(kInf, model.grid());
    for (int n = 0; n < max_iter; ++n) {
        GridMeasure next = step(model, r.limit, a, mix_seed(seed, static_cast<std::uint64_t>(n)));
        r.last_step = d_weak(next, r.limit);
        r.limit = std::move(next);
        r.iterations = n + 1;
        if (r.last_step <= tol && n > 0) {
            r.converged = true;
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------- centers

CenterEngine::CenterEngine(const RdeModel& model, GridMeasure mu_bar, CenterOptions opt, std::uint64_t seed)
    : model_(model), mu_bar_(std::move(mu_bar)), opt_(opt), seed_(seed) {
    orbit_.push_back(mu_bar_);
    loc_.push_back(mu_bar_.finite_mean());
}

const GridMeasure& CenterEngine::ref_orbit(int n) const {
    std::lock_guard<std::mutex> lk(mx_);
    while (static_cast<int>(orbit_.size()) <= n) {
        const auto k = orbit_.size();
        orbit_.push_back(step(model_, orbit_.back(), kInf, mix_seed(seed_, k)));
        loc_.push_back(orbit_.back().finite_mean());
    }
    return orbit_[static_cast<std::size_t>(n)];
}

double CenterEngine::ref_loc(int n) const {
    ref_orbit(n);
    std::lock_guard<std::mutex> lk(mx_);
    return loc_[static_cast<std::size_t>(n)];
}

double CenterEngine::center(const GridMeasure& mu) const { return center(mu, nullptr); }

double CenterEngine::center(const GridMeasure& mu, int* iterations) const {
    if (!model_.admissible(mu)) throw DomainViolation("measure outside the admissible set");
    GridMeasure m = mu;
    double prev = kInf;
    int quiet = 0;
    for (int n = 1; n <= opt_.max_iter; ++n) {
        // same seeds as the reference orbit so Monte Carlo noise is coupled
        m = step(model_, m, kInf, mix_seed(seed_, static_cast<std::uint64_t>(n - 1)));
        const double c = m.finite_mean() - ref_loc(n);
        if (!std::isfinite(c)) throw NotConverged("iterate lost all finite mass");
        quiet = std::abs(c - prev) <= opt_.tol ? quiet + 1 : 0;
        prev = c;
        if (quiet >= 2) {
            if (iterations) *iterations = n;
            const double d = d_weak(m, shift(ref_orbit(n), c));
            if (d > opt_.match_tol) {
                std::ostringstream os;
                os << "iterate is " << d << " from the nearest translate (match_tol " << opt_.match_tol << ")";
                throw NotConverged(os.str());
            }
            return c;
        }
    }
    throw NotConverged("center did not settle within max_iter");
}

double CenterEngine::S(double a, double c) const {
    if (c == kInf) return center(step(model_, dirac(kInf, model_.grid()), a, seed_));
    // centers are translation-equivariant: c~(Phi_a[mu_bar_c]) = c + c~(Phi_{a-c}[mu_bar]);
    // evaluating the right side avoids re-binning mu_bar at a fractional shift
    const double u = a - c;
    {
        std::lock_guard<std::mutex> lk(mx_);
        if (auto it = cut_center_.find(u); it != cut_center_.end()) return c + it->second;
    }
    const double v = center(step(model_, mu_bar_, u, seed_));
    std::lock_guard<std::mutex> lk(mx_);
    cut_center_.emplace(u, v);
    return c + v;
}

GridMeasure CenterEngine::translate_ref(double c) const {
    if (c == kInf) return dirac(kInf, model_.grid());
    return shift(mu_bar_, c);
}

std::pair<double, double> CenterEngine::nearest_translate(const GridMeasure& mu, double lo, double hi) const {
    auto dist = [&](double c) { return d_weak(mu, shift(mu_bar_, c)); };
    const int n = 40;
    double best_c = lo, best = kInf;
    for (int i = 0; i <= n; ++i) {
        const double c = lo + (hi - lo) * i / n;
        const double d = dist(c);
        if (d < best) best = d, best_c = c;
    }
    // golden section inside the bracketing cells
    double a = std::max(lo, best_c - (hi - lo) / n), b = std::min(hi, best_c + (hi - lo) / n);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = dist(x1), f2 = dist(x2);
    for (int it = 0; it < 40 && b - a > 1e-6; ++it) {
        if (f1 <= f2) {
            b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = dist(x1);
        } else {
            a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = dist(x2);
        }
    }
    for (auto [c, d] : {std::pair{x1, f1}, std::pair{x2, f2}})
        if (d < best) best = d, best_c = c;
    return {best_c, best};
}

double center(const RdeModel& model, const GridMeasure& mu, const GridMeasure& mu_bar, double tol, int max_iter,
              std::uint64_t seed) {
    CenterOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return CenterEngine(model, mu_bar, o, seed).center(mu);
}

double S_a(const RdeModel& model, const GridMeasure& mu_bar, double c, double a, double tol, std::uint64_t seed) {
    CenterOptions o;
    o.tol = tol;
    return CenterEngine(model, mu_bar, o, seed).S(a, c);
}

double delta_fn(const RdeModel& model, const GridMeasure& mu_bar, double a, double c, double tol, std::uint64_t seed) {
    return c - S_a(model, mu_bar, c, a, tol, seed);
}

double epsilon0_for(const GridMeasure& mu_bar, double eps) {
    auto worst = [&](double c) { return std::max(d_weak(shift(mu_bar, c), mu_bar), d_weak(shift(mu_bar, -c), mu_bar)); };
    double lo = 0.0, hi = eps;
    while (worst(hi) < 0.5 * eps && hi < 64.0) lo = hi, hi *= 2.0;
    for (int i = 0; i < 50; ++i) {
        const double m = 0.5 * (lo + hi);
        (worst(m) < 0.5 * eps ? lo : hi) = m;
    }
    // the shift distance need not be monotone on a grid; back off until a scan agrees
    for (double c = lo; c > 0.0; c *= 0.9) {
        bool ok = true;
        for (int i = 1; i <= 16 && ok; ++i) ok = worst(c * i / 16.0) < 0.5 * eps;
        if (ok) return c;
    }
    return 0.0;
}

// ---------------------------------------------------------------- block search

B1Choice choose_b1_N(const CenterEngine& ce, double c0, const BlockSearchParams& p) {
    if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
    B1Choice out;
    for (int k = 0; k < p.b_ladder; ++k) {
        const double b = p.b_step > 0.0 ? p.b_start + k * p.b_step : p.b_start * std::pow(p.b_ratio, k);
        Json d;
        d["b"] = b;
        const double s0 = ce.S(b, 0.0);
        d["S_b(0)"] = s0;
        d["delta_b"] = -s0;
        d["delta_ratio"] = ce.delta(b + p.delta_dblprime) / ce.delta(b);
        if (!(s0 > -p.epsilon_0 && s0 < 0.0)) {
            d["verdict"] = "S_b(0) outside (-eps0, 0)";
            out.ladder.push_back(d);
            continue;
        }
        double c = c0;
        int N = 0;
        while (c > 0.0 && N <= p.max_N) c = ce.S(b, c), ++N;
        d["N"] = N;
        if (N > p.max_N) {
            d["verdict"] = "N exceeds max_N";
            out.ladder.push_back(d);
            break;  // N(b) only grows with b
        }
        d["end_c0"] = c;
        if (!(c > -p.epsilon_0 && c <= 0.0)) {
            d["verdict"] = "S^N(c0) outside (-eps0, 0]";
            out.ladder.push_back(d);
            continue;
        }
        double l = -p.delta_dblprime;
        for (int i = 0; i < N; ++i) l = ce.S(b, l);
        d["end_low"] = l;
        const bool ok = l > -p.delta && l < -p.delta_dblprime;
        d["verdict"] = ok ? "accepted" : "S^N(-delta'') outside (-delta, -delta'')";
        out.ladder.push_back(d);
        if (ok) {
            out.b1 = b;
            out.N = N;
            out.end_c0 = c;
            out.end_low = l;
            return out;
        }
    }
    Json diag = out.ladder;
    throw SearchFailed("no b1 on the ladder: " + dump_json(diag, -1));
}

namespace {

GridMeasure mix_atom(const GridMeasure& mu, double w, bool plus) {
    std::vector<double> cdf = mu.cdf();
    for (auto& v : cdf) v = (1.0 - w) * v + (plus ? 0.0 : w);
    const double neg = (1.0 - w) * mu.atom_neg_inf() + (plus ? 0.0 : w);
    const double pos = (1.0 - w) * mu.atom_pos_inf() + (plus ? w : 0.0);
    cdf.back() = 1.0 - pos;
    return GridMeasure(mu.grid(), std::move(cdf), neg, pos);
}

struct Probe {
    std::string label;
    GridMeasure mu;
};

std::vector<Probe> block_probes(const CenterEngine& ce, double delta_prime, double eps_prime, double atom_cap) {
    std::vector<Probe> out;
    for (double f : {0.1, 0.5, 0.9}) {
        const double c = -f * delta_prime;
        const GridMeasure base = ce.translate_ref(c);
        std::vector<Probe> cand;
        cand.push_back({"translate", base});
        cand.push_back({"shift+", shift(base, 0.5 * eps_prime)});
        cand.push_back({"shift-", shift(base, -0.5 * eps_prime)});
        const double w = std::min(0.5 * eps_prime, atom_cap);
        cand.push_back({"atom+inf", mix_atom(base, w, true)});
        cand.push_back({"atom-inf", mix_atom(base, w, false)});
        for (auto& p : cand) {
            if (!ce.model().admissible(p.mu)) continue;
            if (d_weak(p.mu, base) >= eps_prime) continue;
            p.label += "@" + std::to_string(c);
            out.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace

BlockResult build_block(const CenterEngine& ce, const BlockSearchParams& p0, std::uint64_t seed) {
    BlockSearchParams p = p0;
    if (!(p.delta > p.delta_dblprime && p.delta_dblprime > p.delta_prime && p.delta_prime > 0.0))
        throw std::invalid_argument("need delta > delta'' > delta' > 0");
    if (!(p.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const RdeModel& model = ce.model();
    const GridSpec& g = model.grid();
    BlockResult r;
    r.diagnostics = Json::object();
    r.epsilon_0 = p.epsilon_0 > 0.0 ? p.epsilon_0 : epsilon0_for(ce.mu_bar(), p.epsilon);
    p.epsilon_0 = r.epsilon_0;
    if (!(r.epsilon_0 > 0.0)) throw SearchFailed("no positive epsilon_0 for this epsilon");

    // b0: first grid-aligned value past -c~(Dirac_0) pulling -delta' into (-delta'', -delta')
    const double cd0 = ce.center(dirac(0.0, g));
    r.diagnostics["center_dirac0"] = cd0;
    Json b0_tried = Json::array();
    bool found = false;
    for (int k = 1; k <= p.b0_ladder && !found; ++k) {
        const double b = g.snapped(-cd0 + k * p.b0_step);
        const double c = ce.S(b, kInf);
        if (!(c > 0.0)) continue;
        const double s = ce.S(b, -p.delta_prime);
        b0_tried.push_back({b, c, s});
        if (s > -p.delta_dblprime && s < -p.delta_prime) {
            r.b0 = b;
            r.c0 = c;
            found = true;
        }
    }
    r.diagnostics["b0_ladder"] = b0_tried;
    if (!found) throw SearchFailed("no b0 on the ladder: " + dump_json(r.diagnostics, -1));

    const B1Choice ch = choose_b1_N(ce, r.c0, p);
    r.b1 = ch.b1;
    r.N = ch.N;
    r.diagnostics["b1_ladder"] = ch.ladder;

    const double atom_cap = 0.5 * 0.05;
    Json ells = Json::array();
    for (int ell = 0; ell <= p.ell_max; ++ell) {
        Block B = Block::subblock({r.b0, ell});
        for (int i = 0; i < r.N; ++i) B = Block::subblock({r.b1, ell}).then(B);
        const GridMeasure top = phi_block(model, dirac(kInf, g), B, seed);
        const double dtop = d_weak(top, ce.mu_bar());
        Json e{{"ell", ell}, {"dweak_top", dtop}};
        if (dtop > p.epsilon) {
            e["verdict"] = "property (i) fails";
            ells.push_back(e);
            continue;
        }
        for (int j = 1; j <= 8; ++j) {
            const double ep = p.epsilon / std::pow(2.0, j);
            const auto probes = block_probes(ce, p.delta_prime, ep, atom_cap);
            std::vector<double> pc(probes.size()), pd(probes.size());
            parallel_for(probes.size(), [&](std::size_t i) {
                const GridMeasure img = phi_block(model, probes[i].mu, B, mix_seed(seed, 1000 + i));
                std::tie(pc[i], pd[i]) = ce.nearest_translate(img, -p.delta, 0.0);
            });
            bool ok = !probes.empty();
            Json pr = Json::array();
            for (std::size_t i = 0; i < probes.size(); ++i) {
                const bool pass = pd[i] < p.epsilon && pc[i] > -p.delta && pc[i] < 0.0;
                ok = ok && pass;
                pr.push_back({{"probe", probes[i].label}, {"c", pc[i]}, {"dweak", pd[i]}, {"pass", pass}});
            }
            e["epsilon_prime"] = ep;
            e["probes"] = pr;
            if (ok) {
                e["verdict"] = "certified";
                ells.push_back(e);
                r.block = std::move(B);
                r.ell = ell;
                r.epsilon_prime = ep;
                r.dweak_top = dtop;
                r.diagnostics["ell_search"] = ells;
                return r;
            }
        }
        e["verdict"] = "property (ii) fails on the probe set";
        ells.push_back(e);
    }
    r.diagnostics["ell_search"] = ells;
    throw SearchFailed("no ell certifies the block: " + dump_json(r.diagnostics, -1));
}

double min_epsilon1(const CenterEngine& ce, double delta_0) {
    double worst = 0.0;
    for (int i = 1; i <= 32; ++i)
        worst = std::max(worst, d_weak(ce.translate_ref(-delta_0 * i / 33.0), ce.mu_bar()));
    worst = std::max(worst, d_weak(ce.translate_ref(-delta_0), ce.mu_bar()));
    return 1.01 * worst;
}

ScheduleResult build_schedule(const CenterEngine& ce, const ScheduleParams& sp0, std::uint64_t seed) {
    ScheduleParams sp = sp0;
    if (!(sp.delta_0 > 0.0 && sp.n_blocks >= 1)) throw std::invalid_argument("bad schedule params");
    if (!(sp.delta_ratio > 0.0 && sp.delta_ratio < 1.0 && sp.dblprime_frac > 0.0 && sp.dblprime_frac < 1.0))
        throw std::invalid_argument("delta_ratio and dblprime_frac must lie in (0, 1)");
    if (!(sp.epsilon_1 > 0.0)) sp.epsilon_1 = min_epsilon1(ce, sp.delta_0);
    for (int i = 1; i <= 32; ++i) {
        const double c = -sp.delta_0 * i / 33.0;
        if (d_weak(ce.translate_ref(c), ce.mu_bar()) >= sp.epsilon_1)
            throw DomainViolation("translates within delta_0 are not epsilon_1-close to mu_bar");
    }
    ScheduleResult out;
    double eps_prev = 2.0 * sp.epsilon_1;
    std::size_t acc = 0;
    for (int n = 1; n <= sp.n_blocks; ++n) {
        BlockSearchParams p = sp.block;
        p.delta = sp.delta_0 * std::pow(sp.delta_ratio, n - 1);
        p.delta_prime = sp.delta_0 * std::pow(sp.delta_ratio, n);
        p.delta_dblprime = p.delta_prime + sp.dblprime_frac * (p.delta - p.delta_prime);
        p.epsilon = eps_prev;
        p.epsilon_0 = 0.0;
        BlockResult br;
        try {
            br = build_block(ce, p, mix_seed(seed, static_cast<std::uint64_t>(n)));
        } catch (const SearchFailed& e) {
            throw SearchFailed("block " + std::to_string(n) + ": " + e.what());
        }
        const double eps_n = std::min(br.epsilon_prime, sp.epsilon_1 / n);
        out.schedule.blocks.push_back(br.block);
        out.schedule.deltas.push_back(p.delta_prime);
        out.schedule.epsilons.push_back(eps_n);
        out.schedule.partial_sums.push_back(acc += br.block.size());
        out.blocks.push_back(std::move(br));
        eps_prev = eps_n;
    }
    return out;
}

// ---------------------------------------------------------------- assumptions

bool AssumptionReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const ReportItem& i) { return i.pass; });
}

Json AssumptionReport::to_json() const {
    Json arr = Json::array();
    for (const auto& i : items) arr.push_back({{"name", i.name}, {"pass", i.pass}, {"evidence", i.evidence}});
    return Json{{"items", arr}, {"all_pass", all_pass()}};
}

std::vector<double> local_log_slopes(const std::vector<double>& a, const std::vector<double>& d) {
    std::vector<double> s;
    for (std::size_t i = 0; i + 1 < a.size() && i + 1 < d.size(); ++i)
        s.push_back((std::log(d[i + 1]) - std::log(d[i])) / (a[i + 1] - a[i]));
    return s;
}

AssumptionReport check_assumptions(const CenterEngine& ce, const ReportSpec& spec, std::uint64_t seed) {
    const RdeModel& model = ce.model();
    const GridSpec& g = model.grid();
    const GridMeasure& mb = ce.mu_bar();
    AssumptionReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const bool incr = model.orientation() == Orientation::Increasing;

    {  // A1: order preservation of the step, at measure level and for the relation
        ReportItem it{"A1", true, Json::object()};
        int bad = 0, tried = 0;
        const int pairs = std::max(4, spec.probes / 8);
        for (int i = 0; i < pairs; ++i) {
            const double t = g.snapped(-0.5 + U(rng)), u = g.snapped(U(rng) * 0.5);
            const GridMeasure lo = translate(mb, t), hi = translate(mb, t + u);
            for (double a : {kInf, 1.0 + U(rng)}) {
                ++tried;
                if (!stochastic_leq(step(model, lo, a, seed), step(model, hi, a, seed))) ++bad;
            }
        }
        int rbad = 0;
        for (int i = 0; i < spec.probes; ++i) {
            const Noise z = model.sample_noise(rng);
            // Poisson branching: one child per point
            const int d = model.arity() > 0 ? model.arity() : static_cast<int>(z.points.size());
            std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                x[static_cast<std::size_t>(k)] = -2.0 + 4.0 * U(rng);
                y[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] + U(rng);
            }
            const double rx = model.relation(x, z), ry = model.relation(y, z);
            // two-step models reverse the order at each single step
            if (incr ? rx > ry + 1e-12 : rx < ry - 1e-12) ++rbad;
        }
        it.pass = bad == 0 && rbad == 0;
        it.evidence = {{"measure_pairs", tried}, {"measure_violations", bad}, {"relation_probes", spec.probes},
                       {"relation_violations", rbad}, {"order", incr ? "increasing" : "reversing per step"}};
        rep.items.push_back(it);
    }
    {  // A2: translation equivariance
        ReportItem it{"A2", true, Json::object()};
        double worst_rel = 0.0, worst_meas = 0.0;
        for (int i = 0; i < spec.probes; ++i) {
            const Noise z = model.sample_noise(rng);
            const int d = model.arity() > 0 ? model.arity() : static_cast<int>(z.points.size());
            std::vector<double> x(static_cast<std::size_t>(d)), y;
            for (auto& v : x) v = -2.0 + 4.0 * U(rng);
            const double c = -1.0 + 2.0 * U(rng);
            y = x;
            for (auto& v : y) v += c;
            const double expect = model.relation(x, z) + (incr ? c : -c);
            worst_rel = std::max(worst_rel, std::abs(model.relation(y, z) - expect));
        }
        for (double t : {-0.5, 0.25, 1.0}) {
            const double ts = g.snapped(t) - g.snapped(0.0);
            const GridMeasure lhs = step(model, translate(mb, ts), kInf, seed);
            const GridMeasure rhs = translate(step(model, mb, kInf, seed), ts);
            worst_meas = std::max(worst_meas, d_weak(lhs, rhs));
        }
        it.pass = worst_rel <= 1e-12 && worst_meas <= 1e-9;
        it.evidence = {{"relation_max_error", worst_rel}, {"relation_tol", 1e-12}, {"measure_max_dweak", worst_meas},
                       {"measure_tol", 1e-9}};
        rep.items.push_back(it);
    }
    {  // A3: the admissible set is preserved
        ReportItem it{"A3", true, Json::object()};
        int bad = 0;
        std::vector<GridMeasure> probes{mb, dirac(0.0, g), shift(mb, 0.3)};
        probes.push_back(mix_atom(mb, 0.02, true));
        probes.push_back(mix_atom(mb, 0.02, false));
        int used = 0;
        for (const auto& m : probes) {
            if (!model.admissible(m)) continue;
            used += 2;
            if (!model.admissible(step(model, m, kInf, seed))) ++bad;
            if (!model.admissible(step(model, m, 1.0, seed))) ++bad;
        }
        it.pass = bad == 0;
        it.evidence = {{"probes", used}, {"violations", bad}};
        rep.items.push_back(it);
    }
    {  // A4: stationarity of mu_bar
        ReportItem it{"A4", true, Json::object()};
        const double d = d_weak(step(model, mb, kInf, seed), mb);
        it.pass = d <= spec.stationary_tol;
        it.evidence = {{"dweak_step", d}, {"tol", spec.stationary_tol}};
        rep.items.push_back(it);
    }
    if (spec.check_a5) {  // A5: convergence of probes to translates
        ReportItem it{"A5", true, Json::object()};
        Json rows = Json::array();
        const double cd0 = ce.center(dirac(0.0, g));
        for (double b : {-1.0, -0.5, 0.5, 1.0, 2.0}) {
            const double bs = g.snapped(b) - g.snapped(0.0);
            Json row{{"probe", "dirac"}, {"b", bs}};
            try {
                const double c = ce.center(dirac(bs, g));
                const double err = std::abs(c - cd0 - bs);
                row["center"] = c;
                row["equivariance_error"] = err;
                row["pass"] = err <= 2.0 * g.h;
            } catch (const std::exception& e) {
                row["pass"] = false;
                row["error"] = e.what();
            }
            it.pass = it.pass && row["pass"].get<bool>();
            rows.push_back(row);
        }
        it.evidence = {{"probes", rows}, {"tol", 2.0 * g.h}};
        rep.items.push_back(it);
    }
    {  // A6: centers vary continuously along a mixing path
        ReportItem it{"A6", true, Json::object()};
        const int n = 10;
        std::vector<double> cs;
        const GridMeasure a = dirac(0.0, g), b = translate(mb, g.snapped(1.0) - g.snapped(0.0));
        double jump = 0.0;
        bool ok = true;
        for (int i = 0; i <= n; ++i) {
            const double w = static_cast<double>(i) / n;
            std::vector<double> cdf(a.cdf().size());
            for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = (1.0 - w) * a.cdf()[k] + w * b.cdf()[k];
            try {
                cs.push_back(ce.center(GridMeasure(g, cdf, 0.0, 0.0)));
            } catch (const std::exception&) {
                ok = false;
                break;
            }
            if (i > 0) jump = std::max(jump, std::abs(cs[static_cast<std::size_t>(i)] - cs[static_cast<std::size_t>(i - 1)]));
        }
        const double span = ok ? std::abs(cs.back() - cs.front()) : kInf;
        // a continuous path gives steps of order span / n; a jump would eat most of the span
        it.pass = ok && jump <= 0.5 * span + g.h;
        it.evidence = {{"centers", cs}, {"max_jump", jump}, {"span", span}};
        rep.items.push_back(it);
    }
    {  // A7: superexponential decay of Delta
        ReportItem it{"A7", true, Json::object()};
        std::vector<double> as = spec.a_ladder;
        if (as.empty())
            for (int i = 0; i <= 16; ++i) as.push_back(0.25 * i);
        std::vector<double> ds, used;
        for (double a : as) {
            double d;
            try {
                d = ce.delta(a);
            } catch (const std::exception&) {
                break;
            }
            // below the resolution of the center estimate the ratio is noise
            if (!(d > 10.0 * spec.center_tol)) break;
            ds.push_back(d);
            used.push_back(a);
        }
        const auto sl = local_log_slopes(used, ds);
        const double bmax = spec.betas.empty() ? 0.0 : *std::max_element(spec.betas.begin(), spec.betas.end());
        Json per = Json::array();
        for (double b : spec.betas) per.push_back({{"beta", b}, {"pass", !sl.empty() && sl.back() < -b}});
        it.pass = sl.size() >= 2 && sl.back() < -bmax;
        it.evidence = {{"a", used}, {"delta", ds}, {"local_slopes", sl}, {"betas", per}, {"center_tol", spec.center_tol}};
        rep.items.push_back(it);
    }
    return rep;
}

}  // namespace rdelab
