#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdelab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridMismatch : std::runtime_error {
    GridMismatch() : std::runtime_error("grid mismatch") {}
};
struct WindowOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptySample : std::runtime_error {
    EmptySample() : std::runtime_error("empty sample") {}
};

// Uniform grid x_i = lo + i*h, i = 0..n (n intervals).
struct GridSpec {
    double lo = -40.0;
    double hi = 40.0;
    double h = 0.01;

    GridSpec() = default;
    GridSpec(double lo_, double hi_, double h_);

    std::size_t intervals() const { return n_; }
    std::size_t points() const { return n_ + 1; }
    double x(std::size_t i) const { return lo + static_cast<double>(i) * h; }
    // fractional index of x, unclamped
    double pos(double v) const { return (v - lo) / h; }
    // nearest node, clamped
    std::size_t snap(double v) const;
    // nearest grid coordinate
    double snapped(double v) const { return x(snap(v)); }

    bool operator==(const GridSpec& o) const { return lo == o.lo && hi == o.hi && h == o.h; }

    static GridSpec metric() { return {-40.0, 40.0, 0.01}; }
    static GridSpec cavity() { return {-30.0, 30.0, 0.005}; }

private:
    std::size_t n_ = 8000;
};

// Probability measure on [-inf, +inf]: point masses on grid nodes plus atoms at
// the two infinite ends. cdf[i] = P(X <= x_i), which includes the -inf atom.
class GridMeasure {
public:
    GridMeasure() = default;
    GridMeasure(GridSpec g, std::vector<double> cdf, double neg, double pos);

    // Builds from node masses; mass total is renormalised to 1 - neg - pos.
    static GridMeasure from_pmf(const GridSpec& g, std::vector<double> pmf, double neg, double pos);
    // Tail function f(x_i) = P(X > x_i) on the nodes.
    static GridMeasure from_tail(const GridSpec& g, const std::vector<double>& tail, double neg);

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& cdf() const { return cdf_; }
    double atom_neg_inf() const { return neg_; }
    double atom_pos_inf() const { return pos_; }
    double snap_error() const { return snap_err_; }
    void set_snap_error(double e) { snap_err_ = e; }

    std::vector<double> pmf() const;
    std::vector<double> tail() const;

    // F at an arbitrary real (right-continuous step function).
    double F(double x) const;
    // smallest node with F >= p; +-inf outside the finite range
    double quantile(double p) const;
    // mean of the finite part (conditional on X finite); NaN if no finite mass
    double finite_mean() const;
    double finite_mass() const { return 1.0 - neg_ - pos_; }
    // first index with non-negligible mass and one past the last
    std::pair<std::size_t, std::size_t> support(double eps = 0.0) const;

private:
    GridSpec grid_;
    std::vector<double> cdf_;
    double neg_ = 0.0;
    double pos_ = 0.0;
    double snap_err_ = 0.0;
};

// Adds `mass` at fractional node index p by linear splitting between the two
// neighbouring nodes. Out-of-window mass goes to the matching infinite atom.
inline void deposit(std::vector<double>& pmf, double& neg, double& pos, double p, double mass) {
    const double last = static_cast<double>(pmf.size() - 1);
    if (!(p >= -1e-9)) {
        neg += mass;
        return;
    }
    if (p <= 0.0) {
        pmf[0] += mass;
        return;
    }
    if (p >= last) {
        if (p <= last + 1e-9)
            pmf.back() += mass;
        else
            pos += mass;
        return;
    }
    const double fl = std::floor(p);
    const auto i = static_cast<std::size_t>(fl);
    const double t = p - fl;
    pmf[i] += mass * (1.0 - t);
    pmf[i + 1] += mass * t;
}

struct ClassSpec {
    double alpha = 0.05;
    double delta = 0.05;
    double kappa_alpha = 0.0;
    double kappa_one_minus_alpha = 0.0;

    static ClassSpec from_reference(const GridMeasure& ref, double alpha, double delta);
};

GridMeasure dirac(double a, const GridSpec& g);
GridMeasure translate(const GridMeasure& mu, double r, double tol_mass = 1e-12);
// Fractional shift by linear splitting; used where grid snapping would hide
// sub-step displacements.
GridMeasure shift(const GridMeasure& mu, double r);
bool stochastic_leq(const GridMeasure& mu, const GridMeasure& nu);
double d_weak(const GridMeasure& mu, const GridMeasure& nu);
double d_weighted(const GridMeasure& mu, const GridMeasure& nu, double C);
double d_kolmogorov(const GridMeasure& mu, const GridMeasure& nu);
bool in_upper_class(const GridMeasure& mu, const GridMeasure& ref, const ClassSpec& spec);
bool in_lower_class(const GridMeasure& mu, const GridMeasure& ref, const ClassSpec& spec);
GridMeasure from_samples(const std::vector<double>& samples, const GridSpec& g);
// min(X, a) for X ~ mu
GridMeasure clamp_above(const GridMeasure& mu, double a);

std::string to_json(const GridMeasure& mu);
GridMeasure measure_from_json(const std::string& text);
std::string to_csv(const GridMeasure& mu);

void check_same_grid(const GridMeasure& a, const GridMeasure& b);

}  // namespace rdelab
