#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "rdelab/jsonio.hpp"
#include "rdelab/measure.hpp"

namespace rdelab {

struct NotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SearchFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateCutoff : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Orientation { Increasing, TwoStepIncreasing };

// One draw of the environment at a node: a real xi for the metric family, a
// sorted point list for the Poisson family.
struct Noise {
    double xi = 0.0;
    std::vector<double> points;
};

// Counter-based bit generator: a splitmix64 sequence from a 64-bit key. Cheap
// to construct, so every tree node can own one.
class KeyRng {
public:
    using result_type = std::uint64_t;
    explicit KeyRng(std::uint64_t key) : s_(key) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() {
        std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in (0, 1)
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t s_;
};

class RdeModel {
public:
    virtual ~RdeModel() = default;
    virtual std::string name() const = 0;
    virtual const GridSpec& grid() const = 0;
    // Phi_a[mu]; cutoff = +inf gives Phi. One application of the relation.
    virtual GridMeasure pushforward(const GridMeasure& mu, double cutoff, std::uint64_t seed) const = 0;
    virtual Noise sample_noise(std::mt19937_64& rng) const = 0;
    virtual double relation(const std::vector<double>& children, const Noise& noise) const = 0;
    // noise of the tree node named `key`
    virtual Noise node_noise(std::uint64_t key) const;
    // number of children, 0 for Poisson branching
    virtual int arity() const = 0;
    virtual Orientation orientation() const = 0;
    // membership in the space the center map is defined on
    virtual bool admissible(const GridMeasure& mu) const = 0;
};

// One step of the order-preserving dynamics with cut-off a: Phi_a, or
// min(Phi(Phi(mu)), a) for two-step models.
GridMeasure step(const RdeModel& model, const GridMeasure& mu, double a, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

struct Subblock {
    double a = kInf;
    int ell = 0;
};

// Entries b_1..b_n, applied right to left.
struct Block {
    std::vector<double> entries;
    std::size_t size() const { return entries.size(); }
    static Block subblock(const Subblock& s);
    // juxtaposition: this block then `rhs` (rhs acts first)
    Block then(const Block& rhs) const;
};

struct CutoffSchedule {
    std::vector<Block> blocks;
    std::vector<double> deltas;
    std::vector<double> epsilons;
    std::vector<std::size_t> partial_sums;

    // a_1, a_2, ... flattened (a_1 belongs to the root level)
    std::vector<double> flat() const;
    // A^(l): entries a_n with n < l replaced by +inf (1-based n)
    static std::vector<double> removed(const std::vector<double>& a, std::size_t l);
};

Json to_json(const Block& b);
Json to_json(const CutoffSchedule& s);
CutoffSchedule schedule_from_json(const Json& j);

struct BlockSearchParams {
    double delta = 0.2;
    double delta_prime = 0.05;
    double delta_dblprime = 0.125;
    double epsilon = 0.05;
    double epsilon_0 = 0.0;  // 0: derived from epsilon and mu_bar
    double b_start = 0.25;
    double b_ratio = 1.5;
    double b_step = 0.0;  // > 0: arithmetic ladder b_start + k b_step instead
    int b_ladder = 14;
    int max_N = 400;
    int ell_max = 12;
    int b0_ladder = 120;
    double b0_step = 0.025;
};

struct CenterOptions {
    double tol = 1e-11;
    int max_iter = 400;
    double match_tol = 0.02;
};

// Centers by the location functional (finite mean) compared against the
// iterated reference orbit, so a residual drift in the operator cancels.
class CenterEngine {
public:
    CenterEngine(const RdeModel& model, GridMeasure mu_bar, CenterOptions opt = {}, std::uint64_t seed = 0);

    const RdeModel& model() const { return model_; }
    const GridMeasure& mu_bar() const { return mu_bar_; }
    const CenterOptions& options() const { return opt_; }

    double center(const GridMeasure& mu) const;
    double center(const GridMeasure& mu, int* iterations) const;
    double S(double a, double c) const;
    double delta(double a, double c) const { return c - S(a, c); }
    // Delta(a) = Delta_a(0)
    double delta(double a) const { return delta(a, 0.0); }
    // mu_bar shifted by c (c = +inf gives Dirac(+inf))
    GridMeasure translate_ref(double c) const;
    // closest translate of mu_bar to mu in d_weak with c restricted to [lo, hi]
    std::pair<double, double> nearest_translate(const GridMeasure& mu, double lo, double hi) const;

private:
    double ref_loc(int n) const;
    const GridMeasure& ref_orbit(int n) const;

    const RdeModel& model_;
    GridMeasure mu_bar_;
    CenterOptions opt_;
    std::uint64_t seed_;
    mutable std::mutex mx_;
    mutable std::deque<GridMeasure> orbit_;
    mutable std::vector<double> loc_;
    mutable std::map<double, double> cut_center_;  // keyed by a - c
};

GridMeasure phi(const RdeModel& model, const GridMeasure& mu, int n_iter, std::uint64_t seed);
GridMeasure phi_cut(const RdeModel& model, const GridMeasure& mu, double a, std::uint64_t seed);
GridMeasure phi_block(const RdeModel& model, const GridMeasure& mu, const Block& block, std::uint64_t seed);

struct StationaryResult {
    GridMeasure limit;
    int iterations = 0;
    bool converged = false;
    double last_step = 0.0;
};
StationaryResult stationary_cutoff(const RdeModel& model, double a, double tol, int max_iter, std::uint64_t seed);

double center(const RdeModel& model, const GridMeasure& mu, const GridMeasure& mu_bar, double tol, int max_iter,
              std::uint64_t seed);
double S_a(const RdeModel& model, const GridMeasure& mu_bar, double c, double a, double tol, std::uint64_t seed);
double delta_fn(const RdeModel& model, const GridMeasure& mu_bar, double a, double c, double tol, std::uint64_t seed);

// d_weak(mu_bar_c, mu_bar) < eps / 2 for |c| < result
double epsilon0_for(const GridMeasure& mu_bar, double eps);

struct B1Choice {
    double b1 = 0.0;
    int N = 0;
    double end_c0 = 0.0;       // S^N(c0)
    double end_low = 0.0;      // S^N(-delta'')
    std::vector<Json> ladder;  // diagnostics per tried b
};
B1Choice choose_b1_N(const CenterEngine& ce, double c0, const BlockSearchParams& p);

struct BlockResult {
    Block block;
    double epsilon_prime = 0.0;
    double b0 = 0.0, c0 = 0.0, b1 = 0.0;
    int N = 0;
    int ell = 0;
    double epsilon_0 = 0.0;
    double dweak_top = 0.0;  // property (i) distance
    Json diagnostics;
};
BlockResult build_block(const CenterEngine& ce, const BlockSearchParams& p, std::uint64_t seed);
Json to_json(const BlockResult& b);

struct ScheduleParams {
    double delta_0 = 0.2;
    double epsilon_1 = 0.025;  // <= 0: smallest value the delta_0 precondition allows
    int n_blocks = 3;
    double delta_ratio = 0.5;     // delta_n = delta_0 ratio^n
    double dblprime_frac = 0.5;   // delta'' = delta' + frac (delta - delta')
    BlockSearchParams block;  // delta/delta'/epsilon fields are overwritten per block
};
struct ScheduleResult {
    CutoffSchedule schedule;
    std::vector<BlockResult> blocks;
};
// 1.01 max d_weak(mu_bar_c, mu_bar) over c in (-delta_0, 0)
double min_epsilon1(const CenterEngine& ce, double delta_0);
ScheduleResult build_schedule(const CenterEngine& ce, const ScheduleParams& p, std::uint64_t seed);

struct ReportItem {
    std::string name;
    bool pass = false;
    Json evidence;
};
struct AssumptionReport {
    std::vector<ReportItem> items;
    bool all_pass() const;
    Json to_json() const;
};
struct ReportSpec {
    std::vector<double> betas{1.0, 2.0, 4.0};
    std::vector<double> a_ladder;  // empty: model default
    double stationary_tol = 1e-6;
    double center_tol = 1e-9;
    int probes = 64;
    bool check_a5 = true;
};
AssumptionReport check_assumptions(const CenterEngine& ce, const ReportSpec& spec, std::uint64_t seed);

// local slopes of log Delta on consecutive ladder points
std::vector<double> local_log_slopes(const std::vector<double>& a, const std::vector<double>& d);

}  // namespace rdelab
