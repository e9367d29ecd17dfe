#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rdelab/cavity.hpp"

using namespace rdelab;

namespace {

const GridSpec kGrid(-20.0, 20.0, 0.01);

// I[f](x) = int_{-x}^inf (x + y)^(q-1) f(y) dy by composite Simpson on a fine
// mesh with f evaluated in closed form
template <class F>
double I_simpson(F f, double x, double q, double upper = 60.0) {
    const int n = 200000;
    const double a = -x, h = (upper - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double y = a + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::pow(std::max(x + y, 0.0), q - 1.0) * f(y);
    }
    return s * h / 3.0;
}

double logistic(double y) { return 1.0 / (1.0 + std::exp(y)); }

}  // namespace

TEST_CASE("constants") {
    CHECK(constant_Cq(1.0) == doctest::Approx(4.0));
    CHECK(constant_Cq(2.0) == doctest::Approx(2.0));
    const double c = constant_Cq(1.5);
    CHECK(std::tgamma(1.5) / std::pow(c, 1.5) <= 0.25);
    CHECK(std::tgamma(1.5) / std::pow(c - 0.01, 1.5) > 0.25);
    CHECK(poisson_Pk(1, 0.7) == doctest::Approx(std::exp(-0.7)));
    CHECK(poisson_Pk(2, 0.7) == doctest::Approx(std::exp(-0.7) * 1.7));
    CHECK(poisson_Pk(3, 0.0) == 1.0);
    CHECK(poisson_Pk(2, kInf) == 0.0);
    CHECK_THROWS_AS(poisson_Pk(0, 1.0), DomainError);
    CHECK_THROWS_AS(poisson_Pk(1, -1.0), DomainError);
}

TEST_CASE("I of the logistic tail is softplus at q = 1") {
    const auto I = convolve_I(logistic_tail(kGrid), kGrid, 1.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < kGrid.points(); i += 7) {
        const double x = kGrid.x(i);
        if (std::abs(x) > 15.0) continue;
        worst = std::max(worst, std::abs(I[i] - std::log1p(std::exp(x))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("I at q = 2 against Simpson") {
    const auto I = convolve_I(logistic_tail(kGrid), kGrid, 2.0);
    for (double x : {-3.0, -0.5, 0.0, 1.25, 4.0}) {
        const auto i = kGrid.snap(x);
        CHECK(I[i] == doctest::Approx(I_simpson(logistic, kGrid.x(i), 2.0)).epsilon(1e-5));
    }
}

TEST_CASE("product rule at non-integer q against Simpson") {
    const GridSpec g(-20.0, 20.0, 0.01);
    const auto I = convolve_I(logistic_tail(g), g, 1.5);
    for (double x : {-1.0, 0.5, 2.0}) {
        const auto i = g.snap(x);
        CHECK(I[i] == doctest::Approx(I_simpson(logistic, g.x(i), 1.5, 30.0)).epsilon(1e-4));
    }
    const auto a = convolve_I_product(logistic_tail(g), g, 1.5), b = convolve_I_product_serial(logistic_tail(g), g, 1.5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("logistic tail is a fixed point at q = 1, k = 1") {
    const auto p = CavityParams::make(1.0, 1, kGrid);
    const auto f = logistic_tail(kGrid);
    const auto g = cavity_step(f, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(f[i] - g[i]));
    CHECK(worst < 1e-3);
}

TEST_CASE("one step reverses the order and two steps keep it") {
    const auto p = CavityParams::make(2.0, 1, kGrid);
    const auto lo = weibull_seed(kGrid, 2.0);
    Tail hi(lo.size());
    // shifted right by 0.5: a larger variable
    for (std::size_t i = 0; i < hi.size(); ++i) {
        const double x = kGrid.x(i) - 0.5;
        hi[i] = x > 0.0 ? std::exp(-x * x / 2.0) : 1.0;
    }
    const auto s_lo = cavity_step(lo, p), s_hi = cavity_step(hi, p);
    const auto d_lo = cavity_double_step(lo, p), d_hi = cavity_double_step(hi, p);
    for (std::size_t i = 0; i < lo.size(); ++i) {
        CHECK(s_hi[i] <= s_lo[i] + 1e-12);
        CHECK(d_lo[i] <= d_hi[i] + 1e-12);
    }
}

TEST_CASE("cut-off clamps the image") {
    const auto p = CavityParams::make(2.0, 2, kGrid);
    const auto f = weibull_seed(kGrid, 2.0);
    const auto cut = cavity_step(f, p, 0.5);
    const auto full = cavity_step(f, p);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (kGrid.x(i) < 0.5 - 1e-9)
            CHECK(cut[i] == full[i]);
        else
            CHECK(cut[i] == 0.0);
    }
}

TEST_CASE("solved fixed points at q = 2") {
    for (int k : {1, 2}) {
        const auto p = CavityParams::make(2.0, k);
        const auto sol = solve_cavity(p, 8.0, 1e-10, 20000);
        const auto once = cavity_double_step(sol.tail, p);
        double worst = 0.0;
        for (std::size_t i = 0; i < once.size(); ++i) worst = std::max(worst, std::abs(once[i] - sol.tail[i]));
        CHECK(worst < 1e-8);
        const auto f = sol.tail;
        for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] <= f[i - 1] + 1e-15);
    }
}

TEST_CASE("push-forward agrees with sampled nodes") {
    const auto p = CavityParams::make(2.0, 1);
    const auto sol = solve_cavity(p, 8.0, 1e-10, 20000);
    // start away from the fixed point so the check is not trivial
    const auto mu = translate(sol.mu, 0.5);
    const CavityModel m(p, 12.0);
    const auto analytic = m.pushforward(mu, kInf, 0);
    const std::size_t n = 100000;
    std::vector<double> out(n);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = m.node_noise(rng());
        std::vector<double> kids(z.points.size());
        for (auto& c : kids) c = mu.quantile(U(rng));
        out[i] = m.relation(kids, z);
    }
    const double floor = std::sqrt(std::log(2.0 / 0.001) / (2.0 * static_cast<double>(n)));
    CHECK(d_weak(analytic, from_samples(out, p.grid)) <= floor);
}

TEST_CASE("Poisson stream counts and order") {
    const double T = 3.0;
    for (double q : {1.0, 2.0}) {
        const double mean = std::pow(T, q) / q;
        const int nodes = 10000;
        double sum = 0.0;
        for (int i = 0; i < nodes; ++i) {
            PoissonStream s(mix_seed(7, static_cast<std::uint64_t>(i)), q, T, 1000);
            double x = 0.0, prev = 0.0;
            int c = 0;
            while (s.next(x)) {
                CHECK(x > prev);
                CHECK(x <= T);
                prev = x;
                ++c;
            }
            sum += c;
        }
        const double sd = std::sqrt(mean / nodes);
        CHECK(std::abs(sum / nodes - mean) <= 3.0 * sd);
    }
    PoissonStream capped(1, 2.0, 100.0, 5);
    double x;
    int c = 0;
    while (capped.next(x)) ++c;
    CHECK(c == 5);
}

TEST_CASE("node noise is a function of the key") {
    const CavityModel m(CavityParams::make(2.0, 1));
    const auto a = m.node_noise(99), b = m.node_noise(99), c = m.node_noise(100);
    CHECK(a.points == b.points);
    CHECK(a.points != c.points);
}

TEST_CASE("truncation certificate") {
    const auto p = CavityParams::make(2.0, 1);
    const auto sol = solve_cavity(p, 8.0, 1e-10, 20000);
    double cert = 1.0;
    const double T = poisson_truncation(p, sol.mu, 1e-6, &cert);
    CHECK(cert <= 1e-6);
    CHECK(T > 0.0);
    CHECK(T < p.grid.hi);
}

TEST_CASE("Pk inequalities hold on a lattice") {
    for (int k : {1, 2, 3}) {
        const auto r = check_Pk_inequalities(k, {0.0, 0.5, 1.0, 3.0, 10.0}, {0.05, 0.2}, {0.1, 1.0, 2.0});
        CHECK(r.pass);
        CHECK(r.min_slack_lower >= -1e-12);
        CHECK(r.min_slack_upper >= -1e-12);
    }
}

TEST_CASE("perturbation growth bound") {
    for (double q : {1.0, 1.5, 2.0}) {
        const auto r = check_pert_lemma(CavityParams::make(q, 1));
        CHECK(r.pass);
        CHECK(r.worst_ratio <= 1.0);
        CHECK(r.identity_err < 1e-3);
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS(CavityParams::make(0.5, 1));
    CHECK_THROWS(CavityParams::make(2.0, 0));
}
