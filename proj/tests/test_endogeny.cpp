#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rdelab/cavity.hpp"
#include "rdelab/endogeny.hpp"
#include "rdelab/hiergraph.hpp"

using namespace rdelab;

namespace {

const GridSpec kSmall(-5.0, 5.0, 0.1);

GridMeasure random_measure(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> pmf(kSmall.points(), 0.0);
    for (int b = 0; b < 6; ++b) pmf[rng() % pmf.size()] += U(rng);
    return GridMeasure::from_pmf(kSmall, pmf, 0.0, 0.0);
}

const CavityModel& cavity() {
    static const CavityModel m(CavityParams::make(2.0, 1), 10.0);
    return m;
}

const GridMeasure& cavity_bar() {
    static const GridMeasure mu = solve_cavity(CavityParams::make(2.0, 1), 8.0, 1e-10, 20000).mu;
    return mu;
}

// Root value on the diamond without noise, written out by hand: each node is
// min(lse(c0, c1), lse(c2, c3)) + s, leaves are quantiles of mu at the node's uniform.
double diamond_by_hand(std::uint64_t key, int d, int depth, double s, const GridMeasure& mu, int stream) {
    if (d == depth) return mu.quantile(NoiseTree::uniform(key, stream));
    double c[4];
    for (int i = 0; i < 4; ++i) c[i] = diamond_by_hand(mix_seed(key, i + 1), d + 1, depth, s, mu, stream);
    auto lse = [](double x, double y) {
        const double m = std::max(x, y);
        return m + std::log(std::exp(x - m) + std::exp(y - m));
    };
    return std::min(lse(c[0], c[1]), lse(c[2], c[3])) + s;
}

}  // namespace

TEST_CASE("independent gap against the double sum") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto mu = random_measure(rng);
        const auto p = mu.pmf();
        double want = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < p.size(); ++j) want += p[i] * p[j] * std::abs(kSmall.x(i) - kSmall.x(j));
        CHECK(independent_gap(mu) == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(independent_gap(dirac(kInf, kSmall)) == 0.0);
    CHECK(independent_gap(GridMeasure::from_pmf(kSmall, std::vector<double>(kSmall.points(), 1.0), 0.0, 0.1)) ==
          kInf);
}

TEST_CASE("gap statistics") {
    const auto s = gap_stats({0.1, 0.4, 0.2, std::nan(""), 0.3});
    CHECK(s.non_finite == 1u);
    CHECK(s.max == kInf);
    CHECK(s.median == doctest::Approx(0.3));
    CHECK(gap_stats({1.0, 3.0}).mean == doctest::Approx(2.0));
}

TEST_CASE("noise trees") {
    const auto& m = cavity();
    const NoiseTree t(m, 5, 4);
    CHECK(t.noise(t.root()).points == NoiseTree(m, 5, 4).noise(t.root()).points);
    CHECK(NoiseTree::uniform(7, 1) != NoiseTree::uniform(7, 2));
    CHECK(NoiseTree::uniform(7, 1) == NoiseTree::uniform(7, 1));
    CHECK_THROWS_AS(sample_noise_tree(m, 40, 1), TooLarge);
    CHECK(levels_per_step(m) == 2);
    const HierModel d(HierGraph::diamond(), CascadeParams{});
    CHECK(levels_per_step(d) == 1);
    CHECK(NoiseTree(d, 1, 3).expected_nodes() == doctest::Approx(1 + 4 + 16 + 64));
    const auto cuts = level_cuts(m, {1.0, 2.0, 3.0}, 2);
    CHECK(cuts == std::vector<double>{1.0, kInf, 2.0, kInf});
    CHECK_THROWS_AS(level_cuts(m, {1.0}, 2), ScheduleTooShort);
}

TEST_CASE("window search equals full evaluation") {
    // a short truncation keeps the plain recursion cheap
    const CavityModel m(CavityParams::make(2.0, 1), 5.0);
    const auto& mu = cavity_bar();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 2.0);
    for (int i = 0; i < 60; ++i) {
        const NoiseTree t(m, mix_seed(3, i), 4);
        TreeEval e;
        e.boundary_depth = 4;
        e.cut = {U(rng), kInf, i % 3 ? U(rng) : kInf, kInf};
        e.boundary.law = i % 2 ? &mu : nullptr;
        e.boundary.stream = 1;
        std::size_t fast = 0, slow = 0;
        const double a = eval_tree(t, e, &fast), b = eval_tree_full(t, e, &slow);
        CHECK(a == b);
        CHECK(fast <= slow);
    }
}

TEST_CASE("bivariate gaps on the noiseless diamond match a hand recursion") {
    const double s = -std::log(2.0);
    const HierModel m(HierGraph::diamond(), CascadeParams{0.0, s, 0.05});
    std::vector<double> pmf(GridSpec::metric().points(), 0.0);
    for (double x : {-1.0, 0.0, 0.5, 2.0}) pmf[GridSpec::metric().snap(x)] = 1.0;
    const auto mu = GridMeasure::from_pmf(GridSpec::metric(), pmf, 0.0, 0.0);
    const int n = 30;
    const auto r = bivariate_test(m, mu, {0, 1, 3}, n, 11);
    REQUIRE(r.size() == 3u);
    for (const auto& bp : r) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::uint64_t root = mix_seed(mix_seed(11, 1000 + static_cast<std::uint64_t>(i)), 0);
            sum += std::abs(diamond_by_hand(root, 0, bp.depth, s, mu, 1) - diamond_by_hand(root, 0, bp.depth, s, mu, 2));
        }
        CHECK(bp.gaps.mean == doctest::Approx(sum / n).epsilon(1e-12));
    }
}

TEST_CASE("traces are monotone in k and in the removal index") {
    const auto& m = cavity();
    const std::vector<double> a{1.5, 0.5, 1.0, kInf};
    for (int i = 0; i < 20; ++i) {
        const NoiseTree t(m, mix_seed(9, i), 6);
        const auto k = eval_cutoff_rtp(t, a, 3);
        for (std::size_t j = 1; j < k.trace.size(); ++j) CHECK(k.trace[j] <= k.trace[j - 1]);
        const auto l = eval_removed(t, a, 3, 3);
        CHECK(l.trace.front() == k.root_value);
        for (std::size_t j = 1; j < l.trace.size(); ++j) CHECK(l.trace[j] >= l.trace[j - 1]);
        CHECK(l.root_value >= k.root_value);
    }
    CHECK_THROWS_AS(eval_cutoff_rtp(NoiseTree(m, 1, 4), a, 9), ScheduleTooShort);
}

TEST_CASE("root law matches the measure dynamics") {
    const auto cal = calibrate_drift(HierGraph::diamond(), 0.5, GridSpec::metric());
    const HierModel m(HierGraph::diamond(), CascadeParams{0.5, cal.s_cr, 0.05});
    const std::vector<double> a{1.0, 0.5, 1.5};
    const int k = 3;
    GridMeasure mu = dirac(kInf, m.grid());
    for (int n = k; n >= 1; --n) mu = step(m, mu, a[static_cast<std::size_t>(n - 1)], 0);
    const std::size_t n_trees = 4000;
    std::vector<double> roots(n_trees);
    for (std::size_t i = 0; i < n_trees; ++i) roots[i] = eval_cutoff_rtp(NoiseTree(m, mix_seed(21, i), k), a, k).root_value;
    const double floor = std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(n_trees)));
    CHECK(d_weak(from_samples(roots, m.grid()), mu) <= 2.0 * floor);
}

TEST_CASE("sandwich control with no finite cut-offs fails") {
    const auto& m = cavity();
    CutoffSchedule s;
    for (int b = 0; b < 3; ++b) s.blocks.push_back(Block{std::vector<double>(3, kInf)});
    s.partial_sums = {3, 6, 9};
    s.deltas = {0.8, 0.4, 0.2};
    s.epsilons = {0.1, 0.1, 0.1};
    SandwichParams p;
    p.n_trees = 20;
    p.horizon = 1;
    const auto r = sandwich_test(m, cavity_bar(), s, p);
    CHECK_FALSE(r.pass);
    CHECK(r.rerun_pass);
}

TEST_CASE("evaluation does not depend on the order of trees") {
    const auto& m = cavity();
    const std::vector<double> a{1.0, 0.5, 1.2};
    std::vector<double> fwd, bwd;
    for (int i = 0; i < 10; ++i) fwd.push_back(eval_cutoff_rtp(NoiseTree(m, mix_seed(4, i), 6), a, 3).root_value);
    for (int i = 9; i >= 0; --i) bwd.push_back(eval_cutoff_rtp(NoiseTree(m, mix_seed(4, i), 6), a, 3).root_value);
    std::reverse(bwd.begin(), bwd.end());
    CHECK(fwd == bwd);
}
