#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rdelab/jsonio.hpp"
#include "rdelab/measure.hpp"
#include "rdelab/rde.hpp"

namespace rdelab {

struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class HierGraph {
public:
    HierGraph(int vertex_count, std::vector<std::pair<int, int>> edges, int source, int sink);

    static HierGraph diamond();
    static HierGraph racket();
    static HierGraph single_edge();
    static HierGraph from_json(const Json& j);
    static HierGraph builtin_or_file(const std::string& name_or_path);

    int vertex_count() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }
    int source() const { return src_; }
    int sink() const { return dst_; }
    // all simple directed I->O paths as edge-index lists
    const std::vector<std::vector<int>>& io_paths() const { return paths_; }
    bool nonpivotal() const;
    Json to_json() const;

private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    int src_, dst_;
    std::vector<std::vector<int>> paths_;
};

// Series-parallel decomposition of a two-terminal graph. Leaves are edges.
struct SpNode {
    enum Kind { Edge, Series, Parallel } kind = Edge;
    int edge = -1;
    std::vector<SpNode> kids;
};
// Empty optional-like result: kind Edge with edge = -1 when the graph is not
// series-parallel.
SpNode sp_decompose(const HierGraph& g);

bool validate_nonpivotal(const HierGraph& g);
double percolation_theta(const HierGraph& g, double p);
// number of edge subsets connecting I to O (exact count)
std::uint64_t percolation_connecting_subsets(const HierGraph& g);
double relation_R(const HierGraph& g, const std::vector<double>& xs, double xi_log);

struct CascadeParams {
    double sigma = 0.5;
    double drift = 0.0;
    double alpha = 0.05;
};

// Law of log(e^X + e^Y), X ~ p, Y ~ q independent, on the common grid.
GridMeasure lse_law(const GridMeasure& p, const GridMeasure& q);
GridMeasure lse_law_serial(const GridMeasure& p, const GridMeasure& q);
// Law of min(X, Y) for independent X, Y.
GridMeasure min_law(const GridMeasure& p, const GridMeasure& q);
// Law of X + xi with xi ~ N(s, sigma^2), deposited with linear binning.
GridMeasure add_gaussian(const GridMeasure& p, double s, double sigma);
GridMeasure add_gaussian_serial(const GridMeasure& p, double s, double sigma);
// weights w[m], m = -half..half, of the binned Gaussian shift (index m + half)
std::vector<double> gaussian_kernel(double s, double sigma, double h, long* offset);

enum class Engine { Quadrature, MonteCarlo };

// The random-metric RDE on a hierarchical graph (log scale).
class HierModel : public RdeModel {
public:
    HierModel(HierGraph g, CascadeParams p, GridSpec grid = GridSpec::metric(), Engine e = Engine::Quadrature,
              std::size_t n_samples = 1000000);

    std::string name() const override { return "hiergraph"; }
    const GridSpec& grid() const override { return grid_; }
    GridMeasure pushforward(const GridMeasure& mu, double cutoff, std::uint64_t seed) const override;
    Noise sample_noise(std::mt19937_64& rng) const override;
    double relation(const std::vector<double>& children, const Noise& noise) const override;
    Noise node_noise(std::uint64_t key) const override;
    int arity() const override { return static_cast<int>(graph_.edge_count()); }
    Orientation orientation() const override { return Orientation::Increasing; }
    bool admissible(const GridMeasure& mu) const override;

    const HierGraph& graph() const { return graph_; }
    const CascadeParams& params() const { return params_; }
    Engine engine() const { return engine_; }
    HierModel with_drift(double s) const;
    HierModel with_grid(const GridSpec& g) const;
    HierModel with_engine(Engine e, std::size_t n_samples) const;

private:
    GridMeasure quadrature(const GridMeasure& mu) const;

    HierGraph graph_;
    CascadeParams params_;
    GridSpec grid_;
    Engine engine_;
    std::size_t n_samples_;
    SpNode sp_;
};

// Monte Carlo push-forward: inverse-CDF draws per edge, chunked seeds.
GridMeasure pushforward_mc(const HierGraph& g, const CascadeParams& p, const GridMeasure& mu, double cutoff,
                           std::size_t n_samples, std::uint64_t seed);

struct DriftSearch {
    double s_cr = 0.0;
    double lo = 0.0, hi = 0.0;
    int bisections = 0;
    std::vector<std::pair<double, bool>> trace;  // (s, predicate)
};
DriftSearch find_critical_drift(const HierGraph& g, double sigma, std::pair<double, double> bracket, double a,
                                double tol_s, std::uint64_t seed, double h = 0.01, double window = 20.0);

// Traveling-wave calibration: speed of the recentered drift-free iterates.
struct WaveCalibration {
    double s_cr = 0.0;
    GridMeasure mu_bar;  // centered at median 0
    int iterations = 0;
    double speed_change = 0.0;
};
WaveCalibration calibrate_drift(const HierGraph& g, double sigma, const GridSpec& grid, double tol = 1e-13,
                                int max_iter = 2000);

struct CascadeSample {
    std::vector<double> values;
    bool population = false;  // true: level-by-level pool resampling
};
CascadeSample simulate_cascade_values(const HierGraph& g, const CascadeParams& p, int level, std::size_t n_samples,
                                      std::uint64_t seed, double exact_budget = 2e8);
GridMeasure simulate_cascade(const HierGraph& g, const CascadeParams& p, int level, std::size_t n_samples,
                             std::uint64_t seed, const GridSpec& grid = GridSpec::metric());

}  // namespace rdelab
