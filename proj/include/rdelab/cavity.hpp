#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdelab/jsonio.hpp"
#include "rdelab/measure.hpp"
#include "rdelab/rde.hpp"

namespace rdelab {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
// The tail is not integrable against x^(q-1): Phi sends the measure to -inf.
struct CollapseSignal : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CertificationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A tail function sampled on the grid: f[i] = P(X > x_i).
using Tail = std::vector<double>;

struct CavityParams {
    double q = 2.0;
    int k = 1;
    double C_q = 2.0;
    double M = 2.0;
    double L = 0.0;
    double delta_0 = 0.0;
    GridSpec grid = GridSpec::cavity();

    static CavityParams make(double q, int k, const GridSpec& g = GridSpec::cavity());
    Json to_json() const;
};

// smallest C on the 0.01 lattice with Gamma(q) / C^q <= 1/4
double constant_Cq(double q);

double poisson_Pk(int k, double lambda);

// f beyond grid_max must stay below this for the tail to count as integrable
inline constexpr double kTailThreshold = 1e-8;

// I[f](x) = int_{-x}^inf (x+y)^(q-1) f(y) dy on a grid symmetric about 0.
// q = 1 and q = 2 use cumulative sums with an endpoint correction; other q use
// product integration against the piecewise linear interpolant.
std::vector<double> convolve_I(const Tail& f, const GridSpec& g, double q);
std::vector<double> convolve_I_product(const Tail& f, const GridSpec& g, double q);
std::vector<double> convolve_I_product_serial(const Tail& f, const GridSpec& g, double q);

// P_k(I[f]) with the cut-off applied as f * 1_{x < a} (a snapped to the grid)
Tail cavity_step(const Tail& f, const CavityParams& p, double a = kInf);
Tail cavity_double_step(const Tail& f, const CavityParams& p, double a = kInf);

Tail tail_of(const GridMeasure& mu);
// Mass beyond the window smaller than kTailThreshold is folded onto the last node.
GridMeasure measure_of_tail(const GridSpec& g, const Tail& f);
Tail logistic_tail(const GridSpec& g);
// seed exp(-x^q/q) for x > 0, 1 otherwise
Tail weibull_seed(const GridSpec& g, double q);

// sup |f - g| e^{C|x|} over nodes where either tail is resolved (f or 1 - f
// above `floor`) and the weight stays below 1e6; rounding noise in the
// unresolved tails would dominate otherwise
double d_weighted_tail(const GridSpec& g, const Tail& f, const Tail& h, double C, double floor = 1e-9);

struct CavitySolution {
    GridMeasure mu;
    Tail tail;
    int iterations = 0;
    std::vector<double> trace;         // d_weighted between successive double steps
    double ratio = 0.0;                // geometric mean of successive decrement ratios
    std::vector<double> anneal_a;
    std::vector<double> anneal_dweak;  // between consecutive annealed solutions
    Json to_json() const;
};
CavitySolution solve_cavity(const CavityParams& p, double a, double tol, int max_iter);

double f_pert(double x, double M, double C_q);

struct AdaptedClassSpec {
    enum Side { Upper, Lower };
    double M = 2.0;
    double C_q = 2.0;
    double delta = 0.1;
    Side side = Upper;
};
bool in_adapted_upper_class(const GridSpec& g, const Tail& f, const Tail& f_bar, const AdaptedClassSpec& s);
bool in_adapted_lower_class(const GridSpec& g, const Tail& f, const Tail& f_bar, const AdaptedClassSpec& s);

struct PkReport {
    bool pass = true;
    double min_slack_lower = kInf;  // P_k(l + d) - e^{-d} P_k(l)
    double min_slack_upper = kInf;  // e^{d} P_k(l) - P_k((l - d)^+)
    Json to_json() const;
};
// d ranges over delta * lambda_pert products
PkReport check_Pk_inequalities(int k, const std::vector<double>& lambdas, const std::vector<double>& deltas,
                               const std::vector<double>& lambda_perts);

struct AdaptedCertificate {
    double L = 0.0;
    double delta_0 = 0.0;
    double M = 0.0;
    double K = 0.0;
    Json report;
};
AdaptedCertificate certify_adapted_contraction(const CavityParams& p, const Tail& f_bar,
                                               const std::vector<double>& delta_grid, int random_probes,
                                               std::uint64_t seed);

struct PertBound {
    double identity_err = 0.0;   // max relative error of the x <= -M closed form
    double growth_const = 0.0;   // K with I[f_pert](x) <= K x^(q-1) for x >= max(M, 1)
    double worst_ratio = 0.0;    // max of I[f_pert](x) / (K x^(q-1)) on [M', 3M'], M' = max(M, 1)
    double literal_const = 0.0;  // e^{-CM} / C, which drops the growth of the y >= M piece
    double literal_ratio = 0.0;  // same ratio against literal_const + Gamma(q) e^{-CM} / C^q
    bool pass = false;
};
PertBound check_pert_lemma(const CavityParams& p);

// Cut-off for the Poisson points used in trees; `certificate` bounds the
// probability that a dropped point could change the k-th minimum.
double poisson_truncation(const CavityParams& p, const GridMeasure& mu_bar, double eps, double* certificate);

// Points of the Poisson process with intensity x^(q-1) dx on (0, T] in
// increasing order, from exponential spacings of x^q / q. Stops after
// max_points.
class PoissonStream {
public:
    PoissonStream(std::uint64_t key, double q, double T, int max_points);
    bool next(double& x);

private:
    KeyRng rng_;
    double q_;
    double lam_ = 0.0;
    double end_;
    int left_;
};

class CavityModel : public RdeModel {
public:
    explicit CavityModel(CavityParams p, double truncation = 10.0, int max_children = 1000);

    std::string name() const override { return "cavity"; }
    const GridSpec& grid() const override { return params_.grid; }
    GridMeasure pushforward(const GridMeasure& mu, double cutoff, std::uint64_t seed) const override;
    Noise sample_noise(std::mt19937_64& rng) const override;
    double relation(const std::vector<double>& children, const Noise& noise) const override;
    Noise node_noise(std::uint64_t key) const override;
    PoissonStream points(std::uint64_t key) const { return {key, params_.q, T_, max_children_}; }
    int arity() const override { return 0; }
    Orientation orientation() const override { return Orientation::TwoStepIncreasing; }
    bool admissible(const GridMeasure& mu) const override;

    const CavityParams& params() const { return params_; }
    double truncation() const { return T_; }
    void set_truncation(double T) { T_ = T; }
    int max_children() const { return max_children_; }

private:
    CavityParams params_;
    double T_;
    int max_children_;
};

}  // namespace rdelab
