#include "rdelab/measure.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rdelab/jsonio.hpp"

namespace rdelab {

GridSpec::GridSpec(double lo_, double hi_, double h_) : lo(lo_), hi(hi_), h(h_) {
    if (!(h_ > 0.0) || !(hi_ > lo_) || !std::isfinite(lo_) || !std::isfinite(hi_))
        throw std::invalid_argument("invalid grid");
    const double n = (hi_ - lo_) / h_;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-6 * std::max(1.0, r))
        throw std::invalid_argument("grid width is not a multiple of the step");
    n_ = static_cast<std::size_t>(r);
}

std::size_t GridSpec::snap(double v) const {
    const double p = std::round(pos(v));
    if (p <= 0.0) return 0;
    if (p >= static_cast<double>(n_)) return n_;
    return static_cast<std::size_t>(p);
}

void check_same_grid(const GridMeasure& a, const GridMeasure& b) {
    if (!(a.grid() == b.grid())) throw GridMismatch();
}

GridMeasure::GridMeasure(GridSpec g, std::vector<double> cdf, double neg, double pos)
    : grid_(g), cdf_(std::move(cdf)), neg_(neg), pos_(pos) {
    if (cdf_.size() != grid_.points()) throw std::invalid_argument("cdf length does not match grid");
    if (neg_ < 0.0 || pos_ < 0.0 || neg_ + pos_ > 1.0 + 1e-12) throw std::invalid_argument("bad atoms");
}

GridMeasure GridMeasure::from_pmf(const GridSpec& g, std::vector<double> pmf, double neg, double pos) {
    neg = std::clamp(neg, 0.0, 1.0);
    pos = std::clamp(pos, 0.0, 1.0 - neg);
    const double target = 1.0 - neg - pos;
    double total = 0.0;
    for (double& p : pmf) {
        if (p < 0.0) p = 0.0;
        total += p;
    }
    if (total > 0.0 && target > 0.0) {
        const double s = target / total;
        for (double& p : pmf) p *= s;
    } else if (target > 0.0) {
        // no interior mass but atoms do not add up: give the rest to +inf
        pos = 1.0 - neg;
    }
    std::vector<double> cdf(pmf.size());
    double acc = neg;
    const double top = 1.0 - pos;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        cdf[i] = std::min(acc, top);
    }
    cdf.back() = top;
    return GridMeasure(g, std::move(cdf), neg, pos);
}

GridMeasure GridMeasure::from_tail(const GridSpec& g, const std::vector<double>& tail, double neg) {
    std::vector<double> cdf(tail.size());
    double prev = neg;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const double v = std::clamp(1.0 - tail[i], 0.0, 1.0);
        prev = std::max(prev, v);
        cdf[i] = prev;
    }
    const double pos = 1.0 - cdf.back();
    return GridMeasure(g, std::move(cdf), neg, pos);
}

std::vector<double> GridMeasure::pmf() const {
    std::vector<double> p(cdf_.size());
    double prev = neg_;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
        p[i] = std::max(0.0, cdf_[i] - prev);
        prev = cdf_[i];
    }
    return p;
}

std::vector<double> GridMeasure::tail() const {
    std::vector<double> f(cdf_.size());
    for (std::size_t i = 0; i < cdf_.size(); ++i) f[i] = 1.0 - cdf_[i];
    return f;
}

double GridMeasure::F(double x) const {
    if (x == kInf) return 1.0;
    if (x < grid_.lo) return neg_;
    const double p = std::floor(grid_.pos(x) + 1e-9);
    if (p >= static_cast<double>(grid_.intervals())) return cdf_.back();
    return cdf_[static_cast<std::size_t>(p)];
}

double GridMeasure::quantile(double p) const {
    if (p <= neg_) return -kInf;
    if (p > cdf_.back()) return kInf;
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
    return grid_.x(static_cast<std::size_t>(it - cdf_.begin()));
}

double GridMeasure::finite_mean() const {
    const auto p = pmf();
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        m += p[i] * grid_.x(i);
        s += p[i];
    }
    return s > 0.0 ? m / s : std::nan("");
}

std::pair<std::size_t, std::size_t> GridMeasure::support(double eps) const {
    const auto p = pmf();
    std::size_t a = 0, b = p.size();
    while (a < b && p[a] <= eps) ++a;
    while (b > a && p[b - 1] <= eps) --b;
    return {a, b};
}

ClassSpec ClassSpec::from_reference(const GridMeasure& ref, double alpha, double delta) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
    ClassSpec s;
    s.alpha = alpha;
    s.delta = std::min(delta, alpha);
    s.kappa_alpha = ref.quantile(alpha);
    s.kappa_one_minus_alpha = ref.quantile(1.0 - alpha);
    return s;
}

GridMeasure dirac(double a, const GridSpec& g) {
    std::vector<double> cdf(g.points(), 0.0);
    if (a == kInf) return GridMeasure(g, std::move(cdf), 0.0, 1.0);
    if (a == -kInf) {
        std::fill(cdf.begin(), cdf.end(), 1.0);
        return GridMeasure(g, std::move(cdf), 1.0, 0.0);
    }
    const std::size_t i = g.snap(a);
    std::fill(cdf.begin() + static_cast<std::ptrdiff_t>(i), cdf.end(), 1.0);
    GridMeasure d(g, std::move(cdf), 0.0, 0.0);
    d.set_snap_error(std::abs(g.x(i) - a));
    return d;
}

GridMeasure translate(const GridMeasure& mu, double r, double tol_mass) {
    if (!std::isfinite(r)) throw std::invalid_argument("translate needs a finite shift");
    const auto& g = mu.grid();
    const long m = std::lround(r / g.h);
    const auto p = mu.pmf();
    const long n = static_cast<long>(p.size());
    std::vector<double> q(p.size(), 0.0);
    double lost_lo = 0.0, lost_hi = 0.0;
    for (long i = 0; i < n; ++i) {
        if (p[static_cast<std::size_t>(i)] == 0.0) continue;
        const long j = i + m;
        if (j < 0)
            lost_lo += p[static_cast<std::size_t>(i)];
        else if (j >= n)
            lost_hi += p[static_cast<std::size_t>(i)];
        else
            q[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(i)];
    }
    if (lost_lo + lost_hi > tol_mass) throw WindowOverflow("translate pushes mass out of the grid window");
    auto out = GridMeasure::from_pmf(g, std::move(q), mu.atom_neg_inf() + lost_lo, mu.atom_pos_inf() + lost_hi);
    out.set_snap_error(std::abs(r - static_cast<double>(m) * g.h));
    return out;
}

GridMeasure shift(const GridMeasure& mu, double r) {
    const auto& g = mu.grid();
    const auto p = mu.pmf();
    const double d = r / g.h;
    std::vector<double> q(p.size(), 0.0);
    double neg = mu.atom_neg_inf(), pos = mu.atom_pos_inf();
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != 0.0) deposit(q, neg, pos, static_cast<double>(i) + d, p[i]);
    return GridMeasure::from_pmf(g, std::move(q), neg, pos);
}

bool stochastic_leq(const GridMeasure& mu, const GridMeasure& nu) {
    check_same_grid(mu, nu);
    constexpr double slack = 1e-14;
    if (mu.atom_pos_inf() > nu.atom_pos_inf() + slack) return false;
    if (mu.atom_neg_inf() + slack < nu.atom_neg_inf()) return false;
    const auto& a = mu.cdf();
    const auto& b = nu.cdf();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] + slack < b[i]) return false;
    return true;
}

namespace {

// max over nodes of b[j] - a[min(j+m, K)] and a[j] - b[min(j+m, K)]
double levy_band(const std::vector<double>& a, const std::vector<double>& b, std::size_t m) {
    const std::size_t n = a.size();
    double best = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = std::min(j + m, n - 1);
        best = std::max(best, b[j] - a[k]);
        best = std::max(best, a[j] - b[k]);
    }
    return best;
}

}  // namespace

double d_weak(const GridMeasure& mu, const GridMeasure& nu) {
    check_same_grid(mu, nu);
    const auto& a = mu.cdf();
    const auto& b = nu.cdf();
    const double h = mu.grid().h;
    const double ends = std::max({std::abs(mu.atom_neg_inf() - nu.atom_neg_inf()),
                                  std::abs(mu.atom_pos_inf() - nu.atom_pos_inf()), 0.0});
    // Within eps in [m h, (m+1) h) the band test reads F at node j+m; the band
    // value is non-increasing in m, so the first feasible m is found by bisection.
    auto need = [&](std::size_t m) { return std::max(levy_band(a, b, m), ends); };
    std::size_t lo = 0, hi = a.size();
    if (need(0) <= 0.0) return 0.0;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (need(mid) < static_cast<double>(mid + 1) * h)
            hi = mid;
        else
            lo = mid + 1;
    }
    const double eps = std::max(static_cast<double>(lo) * h, need(lo));
    return std::min(eps, 1.0);
}

double d_kolmogorov(const GridMeasure& mu, const GridMeasure& nu) {
    check_same_grid(mu, nu);
    double best = std::max(std::abs(mu.atom_neg_inf() - nu.atom_neg_inf()),
                           std::abs(mu.atom_pos_inf() - nu.atom_pos_inf()));
    for (std::size_t i = 0; i < mu.cdf().size(); ++i)
        best = std::max(best, std::abs(mu.cdf()[i] - nu.cdf()[i]));
    return best;
}

double d_weighted(const GridMeasure& mu, const GridMeasure& nu, double C) {
    check_same_grid(mu, nu);
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    if (mu.atom_neg_inf() > 0.0 || mu.atom_pos_inf() > 0.0 || nu.atom_neg_inf() > 0.0 || nu.atom_pos_inf() > 0.0)
        return kInf;
    const auto& g = mu.grid();
    double best = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i) {
        const double d = std::abs(mu.cdf()[i] - nu.cdf()[i]);
        if (d == 0.0) continue;
        best = std::max(best, d * std::exp(C * std::abs(g.x(i))));
    }
    return best;
}

bool in_upper_class(const GridMeasure& mu, const GridMeasure& ref, const ClassSpec& spec) {
    check_same_grid(mu, ref);
    constexpr double slack = 1e-12;
    const auto& g = mu.grid();
    if (mu.atom_neg_inf() > ref.atom_neg_inf() + spec.delta + slack) return false;
    for (std::size_t i = 0; i < g.points(); ++i) {
        const double x = g.x(i);
        const bool core = x >= spec.kappa_alpha && x <= spec.kappa_one_minus_alpha;
        const double allow = core ? 0.0 : spec.delta;
        if (mu.cdf()[i] > ref.cdf()[i] + allow + slack) return false;
    }
    return true;
}

bool in_lower_class(const GridMeasure& mu, const GridMeasure& ref, const ClassSpec& spec) {
    check_same_grid(mu, ref);
    constexpr double slack = 1e-12;
    const auto& g = mu.grid();
    if (mu.atom_pos_inf() > ref.atom_pos_inf() + spec.delta + slack) return false;
    for (std::size_t i = 0; i < g.points(); ++i) {
        const double x = g.x(i);
        const bool core = x >= spec.kappa_alpha && x <= spec.kappa_one_minus_alpha;
        const double allow = core ? 0.0 : spec.delta;
        if (mu.cdf()[i] < ref.cdf()[i] - allow - slack) return false;
    }
    return true;
}

GridMeasure from_samples(const std::vector<double>& samples, const GridSpec& g) {
    if (samples.empty()) throw EmptySample();
    std::vector<double> pmf(g.points(), 0.0);
    double neg = 0.0, pos = 0.0;
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double s : samples) {
        if (s == kInf)
            pos += w;
        else if (s == -kInf)
            neg += w;
        else
            deposit(pmf, neg, pos, g.pos(s), w);
    }
    return GridMeasure::from_pmf(g, std::move(pmf), neg, pos);
}

GridMeasure clamp_above(const GridMeasure& mu, double a) {
    if (a == kInf) return mu;
    const auto& g = mu.grid();
    const double p = g.pos(a);
    auto pmf = mu.pmf();
    double neg = mu.atom_neg_inf(), pos = 0.0;
    if (p <= 0.0) {
        // everything finite sits at or above a
        double m = mu.atom_pos_inf();
        for (double v : pmf) m += v;
        std::fill(pmf.begin(), pmf.end(), 0.0);
        deposit(pmf, neg, pos, p, m);
        return GridMeasure::from_pmf(g, std::move(pmf), neg, pos);
    }
    const double last = static_cast<double>(g.intervals());
    const double pc = std::min(p, last);
    // nodes strictly above a move to a
    const auto first_above = static_cast<std::size_t>(std::floor(pc + 1e-9)) + 1;
    double m = mu.atom_pos_inf();
    for (std::size_t i = first_above; i < pmf.size(); ++i) {
        m += pmf[i];
        pmf[i] = 0.0;
    }
    deposit(pmf, neg, pos, pc, m);
    return GridMeasure::from_pmf(g, std::move(pmf), neg, pos);
}

std::string to_json(const GridMeasure& mu) {
    Json j;
    j["grid_min"] = mu.grid().lo;
    j["grid_max"] = mu.grid().hi;
    j["step"] = mu.grid().h;
    j["cdf"] = mu.cdf();
    j["atom_neg_inf"] = mu.atom_neg_inf();
    j["atom_pos_inf"] = mu.atom_pos_inf();
    return dump_json(j, -1);
}

GridMeasure measure_from_json(const std::string& text) {
    const auto j = Json::parse(text);
    GridSpec g(j.at("grid_min").get<double>(), j.at("grid_max").get<double>(), j.at("step").get<double>());
    return GridMeasure(g, j.at("cdf").get<std::vector<double>>(), j.at("atom_neg_inf").get<double>(),
                       j.at("atom_pos_inf").get<double>());
}

std::string to_csv(const GridMeasure& mu) {
    std::string out = "x,F\n";
    char buf[64];
    for (std::size_t i = 0; i < mu.cdf().size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", mu.grid().x(i), mu.cdf()[i]);
        out += buf;
    }
    return out;
}

}  // namespace rdelab
