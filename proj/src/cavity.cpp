#include "rdelab/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdelab/parallel.hpp"

namespace rdelab {

namespace {

void require_symmetric(const GridSpec& g) {
    if (std::abs(g.lo + g.hi) > 1e-9 * std::max(1.0, g.hi))
        throw std::invalid_argument("cavity grids must be symmetric about 0");
}

// second order derivative estimate at node j
double deriv(const Tail& f, std::size_t j, double h) {
    const std::size_t n = f.size();
    if (n < 3) return 0.0;
    if (j == 0) return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    if (j == n - 1) return (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return (f[j + 1] - f[j - 1]) / (2.0 * h);
}

// exponential extrapolation of the tail past the last node
void tail_beyond(const Tail& f, const GridSpec& g, double* t0, double* t1) {
    *t0 = 0.0;
    *t1 = 0.0;
    const std::size_t K = f.size() - 1;
    if (f[K] <= 0.0 || f[K - 1] <= f[K]) return;
    const double lam = std::log(f[K - 1] / f[K]) / g.h;
    *t0 = f[K] / lam;
    *t1 = f[K] * (g.x(K) / lam + 1.0 / (lam * lam));
}

void check_integrable(const Tail& f) {
    if (f.empty()) throw std::invalid_argument("empty tail");
    if (!(f.back() <= kTailThreshold)) throw CollapseSignal("tail not integrable within the window");
}

// product-integration weights of the hat at t = m h for t^(q-1): the part on
// [t - h, t] and the part on [t, t + h]
void hat_weights(std::size_t m, double h, double q, double* left, double* right) {
    auto M0 = [&](double a, double b) { return (std::pow(b, q) - std::pow(a, q)) / q; };
    auto M1 = [&](double a, double b) { return (std::pow(b, q + 1.0) - std::pow(a, q + 1.0)) / (q + 1.0); };
    const double t = static_cast<double>(m) * h;
    *left = 0.0;
    if (m > 0) {
        const double a = t - h;
        *left = (M1(a, t) - a * M0(a, t)) / h;
    }
    const double b = t + h;
    *right = (b * M0(t, b) - M1(t, b)) / h;
}

// f(x - r) by linear interpolation on the nodes; r > 0 moves mass right
Tail translate_tail(const GridSpec& g, const Tail& f, double r) {
    Tail out(f.size());
    const double d = r / g.h;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double p = static_cast<double>(i) - d;
        if (p <= 0.0) {
            out[i] = f.front();
        } else if (p >= static_cast<double>(f.size() - 1)) {
            out[i] = f.back();
        } else {
            const auto j = static_cast<std::size_t>(p);
            const double t = p - static_cast<double>(j);
            out[i] = (1.0 - t) * f[j] + t * f[j + 1];
        }
    }
    return out;
}

// non-increasing, clipped to [0, 1]
void make_tail(Tail& f) {
    double run = 1.0;
    for (double& v : f) {
        v = std::clamp(v, 0.0, 1.0);
        run = std::min(run, v);
        v = run;
    }
}

template <bool Parallel>
std::vector<double> product_rule(const Tail& f, const GridSpec& g, double q) {
    require_symmetric(g);
    check_integrable(f);
    const std::size_t K = f.size() - 1;
    std::vector<double> wl(K + 1), wr(K + 1);
    for (std::size_t m = 0; m <= K; ++m) hat_weights(m, g.h, q, &wl[m], &wr[m]);
    double t0, t1;
    tail_beyond(f, g, &t0, &t1);
    std::vector<double> out(K + 1);
    auto row = [&](std::size_t i) {
        // x_i + x_{K-i+m} = m h
        const std::size_t j = K - i;
        double s = 0.0;
        for (std::size_t m = 0; j + m <= K; ++m) s += (wl[m] + (j + m < K ? wr[m] : 0.0)) * f[j + m];
        const double xi = g.x(i);
        s += std::pow(std::max(0.0, xi + g.x(K)), q - 1.0) * t0;
        out[i] = s;
    };
    if constexpr (Parallel)
        parallel_for(K + 1, row);
    else
        for (std::size_t i = 0; i <= K; ++i) row(i);
    return out;
}

}  // namespace

CavityParams CavityParams::make(double q, int k, const GridSpec& g) {
    if (!(q >= 1.0)) throw DomainError("q must be at least 1");
    if (k < 1) throw DomainError("k must be at least 1");
    CavityParams p;
    p.q = q;
    p.k = k;
    p.C_q = constant_Cq(q);
    p.grid = g;
    return p;
}

Json CavityParams::to_json() const {
    return Json{{"q", q},       {"k", k},
                {"C_q", C_q},   {"M", M},
                {"L", L},       {"delta_0", delta_0},
                {"grid", Json{{"lo", grid.lo}, {"hi", grid.hi}, {"h", grid.h}}}};
}

double constant_Cq(double q) {
    // Gamma(q) / C^q <= 1/4  <=>  C >= (4 Gamma(q))^(1/q)
    const double c = std::exp((std::log(4.0) + std::lgamma(q)) / q);
    double r = std::ceil(c * 100.0 - 1e-9) / 100.0;
    while (std::tgamma(q) / std::pow(r, q) > 0.25) r += 0.01;
    return r;
}

double poisson_Pk(int k, double lambda) {
    if (k < 1) throw DomainError("k must be at least 1");
    if (std::isnan(lambda) || lambda < 0.0) throw DomainError("lambda must be non-negative");
    if (lambda == kInf) return 0.0;
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < k; ++j) {
        term *= lambda / j;
        sum += term;
    }
    return std::exp(-lambda) * sum;
}

std::vector<double> convolve_I(const Tail& f, const GridSpec& g, double q) {
    if (!(q == 1.0 || q == 2.0)) return product_rule<true>(f, g, q);
    require_symmetric(g);
    check_integrable(f);
    const std::size_t K = f.size() - 1;
    const double h = g.h;
    double t0, t1;
    tail_beyond(f, g, &t0, &t1);
    // G0[j] = int_{x_j}^inf f,  G1[j] = int_{x_j}^inf y f(y) dy
    std::vector<double> G0(K + 1), G1(K + 1);
    double s0 = t0, s1 = t1;
    G0[K] = s0;
    G1[K] = s1;
    for (std::size_t j = K; j-- > 0;) {
        s0 += 0.5 * h * (f[j] + f[j + 1]);
        s1 += 0.5 * h * (g.x(j) * f[j] + g.x(j + 1) * f[j + 1]);
        G0[j] = s0;
        G1[j] = s1;
    }
    const double em = h * h / 12.0;
    std::vector<double> out(K + 1);
    for (std::size_t i = 0; i <= K; ++i) {
        const std::size_t j = K - i;
        const double d = deriv(f, j, h);
        if (q == 1.0) {
            out[i] = G0[j] + em * d;
        } else {
            // (x+y) f(y) has derivative f(-x) at the lower limit
            out[i] = g.x(i) * G0[j] + G1[j] + em * f[j];
        }
        if (out[i] < 0.0) out[i] = 0.0;
    }
    return out;
}

std::vector<double> convolve_I_product(const Tail& f, const GridSpec& g, double q) {
    return product_rule<true>(f, g, q);
}

std::vector<double> convolve_I_product_serial(const Tail& f, const GridSpec& g, double q) {
    return product_rule<false>(f, g, q);
}

Tail cavity_step(const Tail& f, const CavityParams& p, double a) {
    const auto lam = convolve_I(f, p.grid, p.q);
    Tail out(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i) out[i] = poisson_Pk(p.k, lam[i]);
    if (a < kInf) {
        const double as = p.grid.snapped(a);
        for (std::size_t i = 0; i < out.size(); ++i)
            if (p.grid.x(i) >= as - 1e-12) out[i] = 0.0;
    }
    return out;
}

Tail cavity_double_step(const Tail& f, const CavityParams& p, double a) {
    return cavity_step(cavity_step(f, p, a), p, a);
}

Tail tail_of(const GridMeasure& mu) { return mu.tail(); }

GridMeasure measure_of_tail(const GridSpec& g, const Tail& f) {
    Tail t = f;
    if (!t.empty() && t.back() <= kTailThreshold) t.back() = 0.0;
    return GridMeasure::from_tail(g, t, 0.0);
}

Tail logistic_tail(const GridSpec& g) {
    Tail f(g.points());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 / (1.0 + std::exp(g.x(i)));
    return f;
}

Tail weibull_seed(const GridSpec& g, double q) {
    Tail f(g.points());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = g.x(i);
        f[i] = x > 0.0 ? std::exp(-std::pow(x, q) / q) : 1.0;
    }
    return f;
}

double d_weighted_tail(const GridSpec& g, const Tail& f, const Tail& h, double C, double floor) {
    const double wmax = std::log(1e6) / C;
    double best = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(g.x(i)) > wmax) continue;
        const double rf = std::min(f[i], 1.0 - f[i]);
        const double rh = std::min(h[i], 1.0 - h[i]);
        if (std::max(rf, rh) < floor) continue;
        best = std::max(best, std::abs(f[i] - h[i]) * std::exp(C * std::abs(g.x(i))));
    }
    return best;
}

Json CavitySolution::to_json() const {
    Json j;
    j["iterations"] = iterations;
    j["ratio"] = ratio;
    j["dweighted_trace"] = trace;
    j["anneal_a"] = anneal_a;
    j["anneal_dweak"] = anneal_dweak;
    return j;
}

namespace {

double tail_mean(const GridSpec& g, const Tail& f) { return measure_of_tail(g, f).finite_mean(); }

// Double steps until successive windowed d_weighted <= tol.
bool settle(Tail& f, const CavityParams& p, double a, double tol, int max_iter, int* used,
            std::vector<double>* trace) {
    const double window_floor = 1e-9;
    while (*used < max_iter) {
        Tail nf = cavity_double_step(f, p, a);
        ++*used;
        const double d = d_weighted_tail(p.grid, nf, f, p.C_q, window_floor);
        trace->push_back(d);
        f = std::move(nf);
        if (d <= tol) return true;
    }
    return false;
}

}  // namespace

CavitySolution solve_cavity(const CavityParams& p, double a, double tol, int max_iter) {
    const auto& g = p.grid;
    if (!(a + 4.0 <= g.hi)) throw DomainError("annealed cut-offs must stay inside the grid");
    CavitySolution out;
    const Tail seed = weibull_seed(g, p.q);
    GridMeasure prev_mu;
    for (int stage = 0; stage < 3; ++stage) {
        const double as = g.snapped(a + 2.0 * stage);
        Tail f = seed;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (g.x(i) >= as - 1e-12) f[i] = 0.0;
        std::vector<double> trace;
        int it = 0;
        // Double steps fix every translate; the single step swaps c and -c, so
        // half the mean gap to the single-step image locates the fixed point.
        bool done = false;
        for (int round = 0; round < 40 && !done; ++round) {
            if (!settle(f, p, as, tol, max_iter, &it, &trace))
                throw NotConverged("cavity iteration did not reach tol at a = " + std::to_string(as));
            const double c = 0.5 * (tail_mean(g, f) - tail_mean(g, cavity_step(f, p, as)));
            if (std::abs(c) <= std::max(tol, 1e-12)) {
                done = true;
            } else {
                f = translate_tail(g, f, -c);
                for (std::size_t i = 0; i < f.size(); ++i)
                    if (g.x(i) >= as - 1e-12) f[i] = 0.0;
            }
        }
        if (!done) throw NotConverged("swap recentring did not settle at a = " + std::to_string(as));
        GridMeasure mu = measure_of_tail(g, f);
        if (stage > 0) out.anneal_dweak.push_back(d_weak(prev_mu, mu));
        out.anneal_a.push_back(as);
        prev_mu = mu;
        out.iterations += it;
        out.tail = std::move(f);
        out.trace = std::move(trace);
    }
    for (double d : out.anneal_dweak)
        if (d > tol) throw NotConverged("annealed solutions disagree: d_weak = " + std::to_string(d));
    // decrement ratio over the geometric part of the trace
    double lr = 0.0;
    int n = 0;
    for (std::size_t i = 1; i < out.trace.size(); ++i)
        if (out.trace[i] > 1e3 * tol && out.trace[i - 1] > 0.0) {
            lr += std::log(out.trace[i] / out.trace[i - 1]);
            ++n;
        }
    out.ratio = n > 0 ? std::exp(lr / n) : 0.0;
    out.mu = prev_mu;
    return out;
}

double f_pert(double x, double M, double C_q) {
    return std::abs(x) >= M ? std::exp(-C_q * std::abs(x)) : 0.0;
}

namespace {
constexpr double kClassSlack = 1e-13;
}

bool in_adapted_upper_class(const GridSpec& g, const Tail& f, const Tail& f_bar, const AdaptedClassSpec& s) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > f_bar[i] + s.delta * f_pert(g.x(i), s.M, s.C_q) + kClassSlack) return false;
    return true;
}

bool in_adapted_lower_class(const GridSpec& g, const Tail& f, const Tail& f_bar, const AdaptedClassSpec& s) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < f_bar[i] - s.delta * f_pert(g.x(i), s.M, s.C_q) - kClassSlack) return false;
    return true;
}

Json PkReport::to_json() const {
    return Json{{"pass", pass}, {"min_slack_lower", min_slack_lower}, {"min_slack_upper", min_slack_upper}};
}

PkReport check_Pk_inequalities(int k, const std::vector<double>& lambdas, const std::vector<double>& deltas,
                               const std::vector<double>& lambda_perts) {
    PkReport r;
    for (double l : lambdas)
        for (double d : deltas)
            for (double lp : lambda_perts) {
                const double e = d * lp;
                const double base = poisson_Pk(k, l);
                const double lower = poisson_Pk(k, l + e) - std::exp(-e) * base;
                const double upper = std::exp(e) * base - poisson_Pk(k, std::max(0.0, l - e));
                r.min_slack_lower = std::min(r.min_slack_lower, lower);
                r.min_slack_upper = std::min(r.min_slack_upper, upper);
            }
    // equality cases may land a few ulps below zero
    r.pass = r.min_slack_lower >= -1e-14 && r.min_slack_upper >= -1e-14;
    return r;
}

namespace {

// Extreme and random members of the adapted class on one side.
std::vector<Tail> class_probes(const GridSpec& g, const Tail& f_bar, double M, double C, double delta, bool upper,
                               int n_random, std::mt19937_64& rng) {
    std::vector<Tail> out;
    Tail ext(f_bar.size());
    for (std::size_t i = 0; i < ext.size(); ++i)
        ext[i] = f_bar[i] + (upper ? 1.0 : -1.0) * delta * f_pert(g.x(i), M, C);
    if (upper) {
        // the largest non-increasing function below the envelope
        double run = 1.0;
        for (std::size_t i = 0; i < ext.size(); ++i) {
            run = std::min(run, std::clamp(ext[i], 0.0, 1.0));
            ext[i] = run;
        }
    } else {
        // the smallest non-increasing function above the envelope
        double run = 0.0;
        for (std::size_t i = ext.size(); i-- > 0;) {
            run = std::max(run, std::clamp(ext[i], 0.0, 1.0));
            ext[i] = run;
        }
    }
    out.push_back(ext);
    out.push_back(f_bar);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int r = 0; r < n_random; ++r) {
        const double s = U(rng) * 0.5;
        const double w = U(rng);
        // a translate on the safe side mixed with the extreme member
        Tail t = translate_tail(g, f_bar, upper ? -s : s);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = w * ext[i] + (1.0 - w) * t[i];
        make_tail(t);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

AdaptedCertificate certify_adapted_contraction(const CavityParams& p, const Tail& f_bar,
                                               const std::vector<double>& delta_grid, int random_probes,
                                               std::uint64_t seed) {
    const auto& g = p.grid;
    const std::vector<double> Ls{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    const std::vector<double> Ms{1.0, 2.0, 3.0, 4.0};
    std::vector<double> deltas = delta_grid;
    std::sort(deltas.begin(), deltas.end());
    if (deltas.empty() || deltas.front() <= 0.0) throw DomainError("delta grid must be positive");
    Json tried = Json::array();
    Json witnesses = Json::array();
    for (double M : Ms) {
        // images of the probes do not depend on L
        struct Img {
            double delta;
            bool upper;
            Tail img;
        };
        std::vector<Img> imgs;
        double K = 0.0;
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(M * 1000)));
        for (double d : deltas)
            for (int side = 0; side < 2; ++side) {
                const bool upper = side == 0;
                for (auto& pr : class_probes(g, f_bar, M, p.C_q, d, upper, random_probes, rng)) {
                    Tail im;
                    try {
                        im = cavity_step(pr, p);
                    } catch (const CollapseSignal&) {
                        continue;
                    }
                    for (std::size_t i = 0; i < im.size(); ++i)
                        if (std::abs(g.x(i)) < M) K = std::max(K, std::abs(im[i] - f_bar[i]) / d);
                    imgs.push_back({d, upper, std::move(im)});
                }
            }
        for (double L : Ls) {
            double delta0 = 0.0;
            Json wit;
            for (double d : deltas) {
                bool ok = true;
                for (const auto& im : imgs) {
                    if (im.delta != d) continue;
                    AdaptedClassSpec cs{M, p.C_q, d / 2.0, im.upper ? AdaptedClassSpec::Lower : AdaptedClassSpec::Upper};
                    // upper-class input: T_{L d} Phi lands in the lower class; lower: T_{-L d}
                    const Tail moved = translate_tail(g, im.img, im.upper ? L * d : -L * d);
                    const bool in = im.upper ? in_adapted_lower_class(g, moved, f_bar, cs)
                                             : in_adapted_upper_class(g, moved, f_bar, cs);
                    if (!in) {
                        ok = false;
                        wit = Json{{"M", M}, {"L", L}, {"delta", d}, {"side", im.upper ? "upper" : "lower"}};
                        break;
                    }
                }
                if (!ok) break;
                delta0 = d;
            }
            tried.push_back(Json{{"M", M}, {"L", L}, {"delta_0", delta0}});
            if (delta0 > 0.0) {
                AdaptedCertificate c;
                c.L = L;
                c.M = M;
                c.K = K;
                // the open interval (0, delta_0) must contain every certified delta
                const auto it = std::upper_bound(deltas.begin(), deltas.end(), delta0);
                c.delta_0 = it != deltas.end() ? *it : 2.0 * delta0;
                c.report = Json{{"certified_up_to", delta0}, {"K", K}, {"tried", tried}};
                return c;
            }
            if (!wit.is_null()) witnesses.push_back(wit);
        }
    }
    throw CertificationFailed("adapted contraction not certified; witnesses: " + dump_json(witnesses, -1));
}

PertBound check_pert_lemma(const CavityParams& p) {
    const auto& g = p.grid;
    Tail f(g.points());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = f_pert(g.x(i), p.M, p.C_q);
    // f_pert is not monotone; the quadrature does not need it to be
    const auto I = convolve_I(f, g, p.q);
    PertBound r;
    const double C = p.C_q;
    const double gq = std::tgamma(p.q) / std::pow(C, p.q);
    const double e = std::exp(-C * p.M);
    r.literal_const = e / C;
    // The y >= M piece grows with x as well: (x + y)^(q-1) <= c (x^(q-1) + y^(q-1))
    // with c = max(1, 2^(q-2)) bounds it by c (x^(q-1) e^{-CM} / C + Gamma(q) / C^q),
    // and Gamma(q) / C^q <= Gamma(q) / C^q x^(q-1) once x >= 1.
    const double c = std::max(1.0, std::pow(2.0, p.q - 2.0));
    r.growth_const = e / C + c * (e / C + gq);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = g.x(i);
        if (x <= -p.M - 2.0 * g.h && x >= -p.M - 10.0) {
            const double exact = gq * std::exp(C * x);
            r.identity_err = std::max(r.identity_err, std::abs(I[i] - exact) / exact);
        }
        if (x >= std::max(p.M, 1.0) && x <= 3.0 * std::max(p.M, 1.0)) {
            const double xq = std::pow(x, p.q - 1.0);
            r.worst_ratio = std::max(r.worst_ratio, I[i] / (r.growth_const * xq));
            r.literal_ratio = std::max(r.literal_ratio, I[i] / ((r.literal_const + gq * e) * xq));
        }
    }
    r.pass = r.identity_err <= 1e-3 && r.worst_ratio <= 1.0;
    return r;
}

double poisson_truncation(const CavityParams& p, const GridMeasure& mu_bar, double eps, double* certificate) {
    const auto& g = mu_bar.grid();
    const Tail f = tail_of(mu_bar);
    // P(R > V) + int_U^inf (y + V)^(q-1) f(y) dy, with U = V
    auto bound = [&](double U) {
        const std::size_t iu = std::min(g.points() - 1, static_cast<std::size_t>(std::max(0.0, std::ceil(g.pos(U)))));
        double s = 0.0;
        for (std::size_t i = iu; i + 1 < f.size(); ++i) {
            const double y0 = g.x(i), y1 = g.x(i + 1);
            s += 0.5 * g.h * (std::pow(y0 + U, p.q - 1.0) * f[i] + std::pow(y1 + U, p.q - 1.0) * f[i + 1]);
        }
        return f[iu] + s;
    };
    double U = 0.5;
    while (U < g.hi / 2.0 && bound(U) > eps) U += 0.1;
    if (certificate) *certificate = bound(U);
    return 2.0 * U;
}

PoissonStream::PoissonStream(std::uint64_t key, double q, double T, int max_points)
    : rng_(key), q_(q), end_(std::pow(T, q) / q), left_(max_points) {}

bool PoissonStream::next(double& x) {
    if (left_ <= 0) return false;
    lam_ -= std::log(rng_.uniform());
    if (lam_ > end_) {
        left_ = 0;
        return false;
    }
    --left_;
    x = q_ == 2.0 ? std::sqrt(2.0 * lam_) : std::pow(q_ * lam_, 1.0 / q_);
    return true;
}

CavityModel::CavityModel(CavityParams p, double truncation, int max_children)
    : params_(std::move(p)), T_(truncation), max_children_(max_children) {
    require_symmetric(params_.grid);
    if (max_children_ < 1) throw std::invalid_argument("max_children must be positive");
}

GridMeasure CavityModel::pushforward(const GridMeasure& mu, double cutoff, std::uint64_t) const {
    const auto& g = params_.grid;
    if (mu.grid() != g) throw GridMismatch();
    GridMeasure img;
    if (mu.atom_neg_inf() >= 1.0 - 1e-15) {
        img = dirac(kInf, g);
    } else {
        const Tail f = tail_of(mu);
        bool collapse = mu.atom_pos_inf() > kTailThreshold;
        Tail out;
        if (!collapse) {
            try {
                out = cavity_step(f, params_);
            } catch (const CollapseSignal&) {
                collapse = true;
            }
        }
        if (collapse) {
            img = dirac(-kInf, g);
        } else {
            // mass past the window that is not negligible is the +inf atom
            img = GridMeasure::from_tail(g, out, 0.0);
            if (img.atom_pos_inf() <= kTailThreshold) img = measure_of_tail(g, out);
        }
    }
    if (cutoff < kInf) img = clamp_above(img, cutoff);
    return img;
}

Noise CavityModel::sample_noise(std::mt19937_64& rng) const {
    PoissonStream ps(rng(), params_.q, T_, max_children_);
    Noise n;
    double x;
    while (ps.next(x)) n.points.push_back(x);
    return n;
}

Noise CavityModel::node_noise(std::uint64_t key) const {
    PoissonStream ps = points(key);
    Noise n;
    double x;
    while (ps.next(x)) n.points.push_back(x);
    return n;
}

double CavityModel::relation(const std::vector<double>& children, const Noise& noise) const {
    if (children.size() != noise.points.size()) throw std::invalid_argument("one child per Poisson point");
    const std::size_t k = static_cast<std::size_t>(params_.k);
    if (children.size() < k) return kInf;
    std::vector<double> v(children.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = noise.points[i] - children[i];
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k - 1), v.end());
    return v[k - 1];
}

bool CavityModel::admissible(const GridMeasure& mu) const {
    return mu.atom_neg_inf() <= kTailThreshold && mu.atom_pos_inf() <= kTailThreshold &&
           mu.grid() == params_.grid;
}

}  // namespace rdelab
