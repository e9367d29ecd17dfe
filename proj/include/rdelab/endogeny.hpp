#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rdelab/jsonio.hpp"
#include "rdelab/measure.hpp"
#include "rdelab/rde.hpp"

namespace rdelab {

struct ScheduleTooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tree levels per step of the dynamics: 2 for two-step models.
int levels_per_step(const RdeModel& m);

// Noise on the tree, regenerated on demand. A node is named by a key that
// hashes its path from the root, so the noise at a node is a function of
// (seed, path) only and never depends on evaluation order or thread count.
class NoiseTree {
public:
    NoiseTree(const RdeModel& m, std::uint64_t seed, int depth);

    const RdeModel& model() const { return *model_; }
    std::uint64_t seed() const { return seed_; }
    int depth() const { return depth_; }

    std::uint64_t root() const { return mix_seed(seed_, 0); }
    static std::uint64_t child(std::uint64_t key, std::size_t i) { return mix_seed(key, i + 1); }

    Noise noise(std::uint64_t key) const;
    // uniform in (0, 1) attached to the node; streams are independent
    static double uniform(std::uint64_t key, int stream);

    // mean number of nodes a full traversal visits
    double expected_nodes() const;

private:
    const RdeModel* model_;
    std::uint64_t seed_;
    int depth_;
};

// Throws TooLarge when a full traversal is expected to exceed node_budget.
NoiseTree sample_noise_tree(const RdeModel& m, int depth, std::uint64_t seed, double node_budget = 1e9);

// Values at the boundary level: +inf everywhere, or a draw from `law` by the
// node's own uniform so that evaluations sharing the stream are coupled.
struct Boundary {
    const GridMeasure* law = nullptr;
    int stream = 0;
};

struct TreeEval {
    int boundary_depth = 0;    // tree level where values are set
    std::vector<double> cut;   // cut-off per tree level above the boundary
    Boundary boundary;
    double node_budget = 5e8;  // TooLarge past this many visited nodes
};

// Per-level cut-offs for the first k steps of a schedule.
std::vector<double> level_cuts(const RdeModel& m, const std::vector<double>& a, int k);

// Root value. Poisson trees with k = 1 are evaluated with a window search
// that skips subtrees unable to move the minimum; the value is exact.
double eval_tree(const NoiseTree& t, const TreeEval& e, std::size_t* visited = nullptr);
// Same value by plain recursion over every node.
double eval_tree_full(const NoiseTree& t, const TreeEval& e, std::size_t* visited = nullptr);

struct RtpEvaluation {
    double root_value = 0.0;
    std::vector<double> trace;  // root value for each prefix length 1..k (or removal 0..l)
};
// X^{A,k}: +inf at depth k steps, cut-offs a_1..a_k
RtpEvaluation eval_cutoff_rtp(const NoiseTree& t, const std::vector<double>& a, int k);
// X^{A^(l),k}, trace over l' = 0..l
RtpEvaluation eval_removed(const NoiseTree& t, const std::vector<double>& a, std::size_t l, int k);

struct GapStats {
    double mean = 0.0, median = 0.0, p95 = 0.0, max = 0.0;
    std::size_t non_finite = 0;
    Json to_json() const;
};
GapStats gap_stats(std::vector<double> gaps);

struct SandwichParams {
    double tol = 0.05;
    int n_trees = 200;
    int horizon = 4;  // explicit tree depth in steps
    double pass_fraction = 0.95;
    double confidence = 0.05;  // DKW allowance for the root law
    int rerun_trees = 5;
    std::uint64_t seed = 1;
};

struct SandwichReport {
    bool pass = false;
    bool gap_pass = false, law_pass = false, rerun_pass = false;
    std::size_t k_star = 0, l_star = 0, sub_len = 0;
    double frac_within = 0.0;
    GapStats gaps;          // subblock increments at (l*, k*)
    GapStats block_gaps;    // whole-block increment in l
    GapStats literal_gaps;  // X* - X^{A,k*}
    double dweak_roots = 0.0;
    double dkw_floor = 0.0;
    Json to_json() const;
};

// Evaluates X at (l*, k*) = (s_{K-1} + 1, s_K) and the two neighbours one
// subblock of the last block away, on n_trees independent trees. Below the
// horizon each configuration continues with its own law, pushed up from
// Dirac(+inf) at depth k by the measure dynamics.
SandwichReport sandwich_test(const RdeModel& m, const GridMeasure& mu_bar, const CutoffSchedule& s,
                             const SandwichParams& p);

struct BivariatePoint {
    int depth = 0;  // tree levels
    GapStats gaps;
    double dweak_roots = 0.0;
    Json to_json() const;
};
// |X - X'| at the root when the level-n values are two independent draws from
// mu_bar over the same noise.
std::vector<BivariatePoint> bivariate_test(const RdeModel& m, const GridMeasure& mu_bar,
                                           const std::vector<int>& depths, int n_trees, std::uint64_t seed);
// E|X - X'| for independent X, X' ~ mu
double independent_gap(const GridMeasure& mu);

}  // namespace rdelab
