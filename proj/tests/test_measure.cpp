#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rdelab/measure.hpp"

using namespace rdelab;

namespace {

const GridSpec kSmall(-5.0, 5.0, 0.1);

GridMeasure random_measure(std::mt19937_64& rng, bool atoms) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> pmf(kSmall.points(), 0.0);
    const int bumps = 1 + static_cast<int>(rng() % 4);
    for (int b = 0; b < bumps; ++b) {
        const auto c = 20 + static_cast<long>(rng() % (kSmall.points() - 40));
        const long w = 1 + static_cast<long>(rng() % 15);
        for (long i = std::max(0L, c - w); i <= std::min<long>(kSmall.points() - 1, c + w); ++i) pmf[i] += U(rng);
    }
    const double neg = atoms ? 0.1 * U(rng) : 0.0;
    const double pos = atoms ? 0.1 * U(rng) : 0.0;
    return GridMeasure::from_pmf(kSmall, pmf, neg, pos);
}

// Levy distance by scanning eps upward: smallest eps on a fine lattice with
// G(x - eps) - eps <= F(x) <= G(x + eps) + eps at every real x. Both CDFs are
// step functions on the grid so checking x at nodes and just below nodes is
// enough.
double levy_bruteforce(const GridMeasure& f, const GridMeasure& g) {
    const auto& s = f.grid();
    std::vector<double> xs;
    for (std::size_t i = 0; i < s.points(); ++i) {
        xs.push_back(s.x(i));
        xs.push_back(s.x(i) - 1e-9);
    }
    xs.push_back(s.hi + 1.0);
    xs.push_back(s.lo - 1.0);
    auto ok = [&](double e) {
        for (double x : xs) {
            if (f.F(x) > g.F(x + e) + e + 1e-12) return false;
            if (g.F(x) > f.F(x + e) + e + 1e-12) return false;
        }
        return std::abs(f.atom_pos_inf() - g.atom_pos_inf()) <= e + 1e-12 &&
               std::abs(f.atom_neg_inf() - g.atom_neg_inf()) <= e + 1e-12;
    };
    for (int k = 0; k <= 1000; ++k)
        if (ok(k * 1e-3)) return k * 1e-3;
    return 1.0;
}

}  // namespace

TEST_CASE("dirac and translate") {
    const auto d = dirac(0.3, kSmall);
    CHECK(d.quantile(0.5) == doctest::Approx(0.3));
    CHECK(d.finite_mean() == doctest::Approx(0.3));
    const auto t = translate(d, 1.0);
    CHECK(t.quantile(0.5) == doctest::Approx(1.3));
    const auto up = dirac(kInf, kSmall);
    CHECK(up.atom_pos_inf() == 1.0);
    CHECK(std::isnan(up.finite_mean()));
}

TEST_CASE("d_weak between point masses is the distance capped at 1") {
    for (double c : {0.0, 0.2, 0.5, 0.9, 2.5}) {
        const auto a = dirac(0.0, kSmall), b = dirac(c, kSmall);
        CHECK(d_weak(a, b) == doctest::Approx(std::min(c, 1.0)).epsilon(1e-9));
    }
    CHECK(d_weak(dirac(0.0, kSmall), dirac(kInf, kSmall)) == 1.0);
}

TEST_CASE("d_weak agrees with a brute force Levy scan") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 25; ++t) {
        const auto f = random_measure(rng, t % 2 == 0), g = random_measure(rng, t % 3 == 0);
        // the brute force lattice is 1e-3, the grid step 0.1
        CHECK(std::abs(d_weak(f, g) - levy_bruteforce(f, g)) <= 1.1e-3);
    }
}

TEST_CASE("metric properties") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 40; ++t) {
        const auto a = random_measure(rng, true), b = random_measure(rng, true), c = random_measure(rng, false);
        CHECK(d_weak(a, a) == 0.0);
        CHECK(d_weak(a, b) == doctest::Approx(d_weak(b, a)));
        CHECK(d_weak(a, c) <= d_weak(a, b) + d_weak(b, c) + 1e-12);
        CHECK(d_weak(a, b) <= d_kolmogorov(a, b) + 1e-12);
        CHECK(d_weak(a, b) <= 1.0);
    }
}

TEST_CASE("translation is monotone in the stochastic order") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_measure(rng, true);
        CHECK(stochastic_leq(a, translate(a, 0.5)));
        CHECK_FALSE(stochastic_leq(translate(a, 0.5), translate(a, -0.5)));
        CHECK(stochastic_leq(clamp_above(a, 1.0), a));
    }
}

TEST_CASE("clamp_above moves mass above the cut onto it") {
    std::mt19937_64 rng(3);
    const auto a = random_measure(rng, true);
    const auto c = clamp_above(a, 0.0);
    CHECK(c.atom_pos_inf() == 0.0);
    CHECK(c.F(0.0) == doctest::Approx(1.0));
    CHECK(c.F(-0.05) == doctest::Approx(a.F(-0.05)));
    CHECK(c.atom_neg_inf() == a.atom_neg_inf());
}

TEST_CASE("from_samples preserves the sample mean") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> Z(0.3, 1.1);
    std::vector<double> xs(5000);
    double m = 0.0;
    for (auto& x : xs) {
        x = std::clamp(Z(rng), -4.9, 4.9);
        m += x;
    }
    m /= static_cast<double>(xs.size());
    CHECK(from_samples(xs, kSmall).finite_mean() == doctest::Approx(m).epsilon(1e-10));
    xs.push_back(kInf);
    CHECK(from_samples(xs, kSmall).atom_pos_inf() == doctest::Approx(1.0 / 5001.0));
    CHECK_THROWS_AS(from_samples({}, kSmall), EmptySample);
}

TEST_CASE("json round trip is exact") {
    std::mt19937_64 rng(21);
    const auto a = random_measure(rng, true);
    const auto b = measure_from_json(to_json(a));
    CHECK(b.grid() == a.grid());
    CHECK(b.cdf() == a.cdf());
    CHECK(b.atom_neg_inf() == a.atom_neg_inf());
    CHECK(b.atom_pos_inf() == a.atom_pos_inf());
}

TEST_CASE("grid mismatch is rejected") {
    const auto a = dirac(0.0, kSmall), b = dirac(0.0, GridSpec(-5.0, 5.0, 0.05));
    CHECK_THROWS_AS(d_weak(a, b), GridMismatch);
}
