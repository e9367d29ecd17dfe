#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "rdelab/cavity.hpp"
#include "rdelab/endogeny.hpp"
#include "rdelab/hiergraph.hpp"

namespace rdelab::cli {

namespace {

// ---------------------------------------------------------------- artifacts

std::string num(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_path(const std::string& out) {
    const std::string ext = ".json";
    if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
        return out.substr(0, out.size() - ext.size()) + ".csv";
    return out + ".csv";
}

std::string out_path(const Json& cfg, const std::string& command) {
    const auto& o = cfg.at("out");
    return o.is_null() || o.get<std::string>().empty() ? command + ".json" : o.get<std::string>();
}

// Every artifact carries the resolved config and the seed next to the results.
void emit(const std::string& command, const Json& cfg, const Json& body, const std::string* csv = nullptr) {
    Json art;
    art["command"] = command;
    art["seed"] = cfg.at("seed");
    art["config"] = cfg;
    for (auto it = body.begin(); it != body.end(); ++it) art[it.key()] = it.value();
    const std::string path = out_path(cfg, command);
    write_atomic(path, dump_json(art) + "\n");
    if (csv) write_atomic(csv_path(path), *csv);
}

std::string measure_csv(const GridMeasure& mu) {
    std::string s = "x,cdf\n";
    const auto& g = mu.grid();
    const auto [lo, hi] = mu.support(1e-14);
    for (std::size_t i = lo; i < hi; ++i) s += num(g.x(i)) + "," + num(mu.cdf()[i]) + "\n";
    return s;
}

std::uint64_t seed_of(const Json& cfg) {
    const int s = get_int(cfg, "seed");
    if (s < 0) throw ConfigError("seed must be non-negative");
    return static_cast<std::uint64_t>(s);
}

GridSpec grid_of(const Json& cfg, const std::string& key) {
    const auto v = get_reals(cfg, key);
    if (v.size() != 3) throw ConfigError("'" + key + "' expects [lo, hi, h]");
    try {
        return GridSpec(v[0], v[1], v[2]);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------- models

HierGraph load_graph(const Json& cfg) {
    try {
        return HierGraph::builtin_or_file(cfg.at("graph").get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

void model_fields(Schema& s) {
    s.add("model", Kind::Str, "diamond", "diamond | cavity")
        .add("graph", Kind::Str, "diamond", "builtin graph name or JSON file")
        .add("sigma", Kind::Real, 0.5, "noise scale of the metric model")
        .add("alpha", Kind::Real, 0.05, "class quantile level")
        .add("q", Kind::Real, 2.0, "cavity exponent")
        .add("k", Kind::Int, 1, "cavity order statistic")
        .add("cutoff", Kind::Real, Json(), "cavity solver cut-off (auto: 24 for q = 1, else 8)")
        .add("tol", Kind::Real, Json(), "cavity solver tolerance (auto: 1e-5 for q = 1, else 1e-10)")
        .add("max_iter", Kind::Int, 20000, "cavity solver iteration cap")
        .add("truncation_eps", Kind::Real, 1e-6, "bound on the chance a dropped Poisson point matters");
}

void common_fields(Schema& s) {
    s.require("seed", Kind::Int, "base seed").add("out", Kind::Str, Json(), "JSON artifact path");
}

void fill_cavity_defaults(Json& cfg) {
    const bool q1 = get_real(cfg, "q") == 1.0;
    if (cfg["cutoff"].is_null()) cfg["cutoff"] = q1 ? 24.0 : 8.0;
    if (cfg["tol"].is_null()) cfg["tol"] = q1 ? 1e-5 : 1e-10;
}

struct Bundle {
    std::unique_ptr<RdeModel> model;
    GridMeasure mu_bar;
    Json info;
    double truncation_certificate = 0.0;
};

Bundle make_model(Json& cfg) {
    Bundle b;
    const std::string name = cfg.at("model").get<std::string>();
    if (name == "diamond") {
        const HierGraph g = load_graph(cfg);
        const double sigma = get_real(cfg, "sigma");
        const auto cal = calibrate_drift(g, sigma, GridSpec::metric());
        b.model = std::make_unique<HierModel>(g, CascadeParams{sigma, cal.s_cr, get_real(cfg, "alpha")});
        b.mu_bar = cal.mu_bar;
        b.info = {{"s_cr", cal.s_cr}, {"calibration_iterations", cal.iterations}};
    } else if (name == "cavity") {
        fill_cavity_defaults(cfg);
        const auto p = CavityParams::make(get_real(cfg, "q"), get_int(cfg, "k"));
        const auto sol = solve_cavity(p, get_real(cfg, "cutoff"), get_real(cfg, "tol"), get_int(cfg, "max_iter"));
        double cert = 0.0;
        const double T = poisson_truncation(p, sol.mu, get_real(cfg, "truncation_eps"), &cert);
        b.model = std::make_unique<CavityModel>(p, T);
        b.mu_bar = sol.mu;
        b.truncation_certificate = cert;
        b.info = {{"solver_iterations", sol.iterations},
                  {"truncation", T},
                  {"truncation_certificate", cert},
                  {"truncation_eps", get_real(cfg, "truncation_eps")}};
    } else {
        throw ConfigError("unknown model '" + name + "'");
    }
    return b;
}

bool is_cavity(const Json& cfg) { return cfg.at("model").get<std::string>() == "cavity"; }

// ---------------------------------------------------------------- commands

int run_assumptions(Json& cfg) {
    const auto seed = seed_of(cfg);
    Bundle b = make_model(cfg);
    CenterEngine ce(*b.model, b.mu_bar, CenterOptions{}, seed);
    ReportSpec spec;
    spec.betas = get_reals(cfg, "betas");
    spec.a_ladder = get_reals(cfg, "a_ladder");
    spec.center_tol = get_real(cfg, "center_tol");
    spec.stationary_tol = get_real(cfg, "stationary_tol");
    const auto rep = check_assumptions(ce, spec, seed);
    std::string csv = "a,delta,local_slope\n";
    for (const auto& it : rep.items) {
        if (it.name != "A7") continue;
        const auto a = it.evidence["a"].get<std::vector<double>>();
        const auto d = it.evidence["delta"].get<std::vector<double>>();
        const auto sl = it.evidence["local_slopes"].get<std::vector<double>>();
        for (std::size_t i = 0; i < a.size(); ++i)
            csv += num(a[i]) + "," + num(d[i]) + "," + (i > 0 && i - 1 < sl.size() ? num(sl[i - 1]) : "") + "\n";
    }
    emit("assumptions", cfg, {{"model_info", b.info}, {"report", rep.to_json()}, {"pass", rep.all_pass()}}, &csv);
    return rep.all_pass() ? kPass : kNumericFailure;
}

int run_solve_metric(Json& cfg) {
    seed_of(cfg);
    const HierGraph g = load_graph(cfg);
    const double sigma = get_real(cfg, "sigma");
    const GridSpec grid = grid_of(cfg, "grid");
    const double tol = get_real(cfg, "tol");
    const auto cal = calibrate_drift(g, sigma, grid, tol, get_int(cfg, "max_iter"));
    const HierModel m(g, CascadeParams{sigma, cal.s_cr, get_real(cfg, "alpha")}, grid);
    const double stat = d_weak(step(m, cal.mu_bar, kInf, 0), cal.mu_bar);
    const double stat_tol = get_real(cfg, "stationary_tol");
    const bool pass = stat <= stat_tol;
    const std::string csv = measure_csv(cal.mu_bar);
    emit("solve-metric", cfg,
         {{"s_cr", cal.s_cr},
          {"iterations", cal.iterations},
          {"speed_change", cal.speed_change},
          {"speed_tol", tol},
          {"mean", cal.mu_bar.finite_mean()},
          {"median", cal.mu_bar.quantile(0.5)},
          {"stationarity_dweak", stat},
          {"stationarity_tol", stat_tol},
          {"pass", pass}},
         &csv);
    return pass ? kPass : kNumericFailure;
}

int run_solve_cavity(Json& cfg) {
    const auto seed = seed_of(cfg);
    fill_cavity_defaults(cfg);
    const GridSpec grid = grid_of(cfg, "grid");
    const double q = get_real(cfg, "q");
    const int k = get_int(cfg, "k");
    CavityParams p;
    try {
        p = CavityParams::make(q, k, grid);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const auto sol = solve_cavity(p, get_real(cfg, "cutoff"), get_real(cfg, "tol"), get_int(cfg, "max_iter"));
    Json body{{"params", p.to_json()}, {"solver", sol.to_json()}, {"solver_tol", get_real(cfg, "tol")}};
    bool pass = true;

    if (q == 1.0 && k == 1) {
        const Tail lg = logistic_tail(grid);
        const Tail img = cavity_step(lg, p);
        double res = 0.0, fit = 0.0;
        for (std::size_t i = 0; i < lg.size(); ++i) {
            res = std::max(res, std::abs(img[i] - lg[i]));
            fit = std::max(fit, std::abs(sol.tail[i] - lg[i]));
        }
        const double tol = get_real(cfg, "oracle_tol");
        body["logistic"] = {{"step_residual", res}, {"solution_sup_error", fit}, {"tol", tol}};
        pass = pass && res <= tol && fit <= tol;
    }

    // tail envelopes: f(x) <= C x^{q(k-1)} e^{-x^q} and F(-x) <= C x^{qk(k-1)} e^{-k x^q}
    const auto xs = get_reals(cfg, "envelope_points");
    const double cmax = get_real(cfg, "envelope_C");
    double cu = 0.0, cl = 0.0;
    Json rows = Json::array();
    for (double x : xs) {
        const double xq = std::pow(x, q);
        const double env_up = std::pow(x, q * (k - 1)) * std::exp(-xq);
        const double env_low = std::pow(x, q * k * (k - 1)) * std::exp(-k * xq);
        const double up = sol.mu.tail()[grid.snap(x)];
        const double low = sol.mu.F(-x);
        cu = std::max(cu, up / env_up);
        cl = std::max(cl, low / env_low);
        rows.push_back({{"x", x}, {"upper_tail", up}, {"lower_tail", low}, {"upper_envelope", env_up},
                        {"lower_envelope", env_low}});
    }
    body["envelopes"] = {{"points", rows},
                         {"C_upper", cu},
                         {"C_lower", cl},
                         {"C_max", cmax},
                         {"upper_pass", cu <= cmax},
                         {"lower_pass", cl <= cmax}};

    if (cfg.at("certify").get<bool>()) {
        try {
            const auto c = certify_adapted_contraction(p, sol.tail, get_reals(cfg, "certify_deltas"), 4, seed);
            body["certificate"] = {{"L", c.L}, {"delta_0", c.delta_0}, {"M", c.M}, {"K", c.K}, {"report", c.report}};
            auto cp = p;
            cp.M = c.M;
            const auto pb = check_pert_lemma(cp);
            body["pert_bound"] = {{"identity_err", pb.identity_err}, {"identity_tol", 1e-3},
                                  {"growth_const", pb.growth_const}, {"worst_ratio", pb.worst_ratio},
                                  {"literal_ratio", pb.literal_ratio}, {"pass", pb.pass}};
        } catch (const CertificationFailed& e) {
            body["certificate"] = {{"error", e.what()}};
        }
    }

    std::string csv = "x,tail\n";
    for (std::size_t i = 0; i < sol.tail.size(); ++i) csv += num(grid.x(i)) + "," + num(sol.tail[i]) + "\n";
    body["pass"] = pass;
    emit("solve-cavity", cfg, body, &csv);
    return pass ? kPass : kNumericFailure;
}

int run_critical_drift(Json& cfg) {
    const auto seed = seed_of(cfg);
    const auto br = get_reals(cfg, "bracket");
    if (br.size() != 2) throw ConfigError("'bracket' expects [lo, hi]");
    const HierGraph g = load_graph(cfg);
    // with no noise the limit is a point mass, so a shallow fine grid suffices and
    // keeps the min-of-split-masses bias (about h/4 per unit drift) small
    const bool exact = get_real(cfg, "sigma") == 0.0;
    if (cfg["h"].is_null()) cfg["h"] = exact ? 0.001 : 0.01;
    if (cfg["window"].is_null()) cfg["window"] = exact ? 2.0 : 20.0;
    DriftSearch r;
    try {
        r = find_critical_drift(g, get_real(cfg, "sigma"), {br[0], br[1]}, get_real(cfg, "cutoff"),
                                get_real(cfg, "tol_s"), seed, get_real(cfg, "h"), get_real(cfg, "window"));
    } catch (const BadBracket& e) {
        throw ConfigError(e.what());
    }
    std::string csv = "s,nontrivial\n";
    Json tr = Json::array();
    for (auto [s, v] : r.trace) {
        csv += num(s) + "," + (v ? "1" : "0") + "\n";
        tr.push_back({s, v});
    }
    emit("critical-drift", cfg,
         {{"s_cr", r.s_cr}, {"lo", r.lo}, {"hi", r.hi}, {"bisections", r.bisections}, {"tol_s", get_real(cfg, "tol_s")},
          {"trace", tr}},
         &csv);
    return kPass;
}

int run_cascade(Json& cfg) {
    const auto seed = seed_of(cfg);
    const HierGraph g = load_graph(cfg);
    const double sigma = get_real(cfg, "sigma");
    const auto cal = calibrate_drift(g, sigma, GridSpec::metric());
    if (cfg["drift"].is_null()) cfg["drift"] = cal.s_cr;
    const CascadeParams cp{sigma, get_real(cfg, "drift"), get_real(cfg, "alpha")};
    const int samples = get_int(cfg, "samples");
    if (samples < 1) throw ConfigError("samples must be positive");
    auto cs = simulate_cascade_values(g, cp, get_int(cfg, "level"), static_cast<std::size_t>(samples), seed);
    // recentre on the location of the stationary law
    double m = 0.0;
    for (double v : cs.values) m += v;
    m /= static_cast<double>(cs.values.size());
    const double shift_by = cal.mu_bar.finite_mean() - m;
    for (auto& v : cs.values) v += shift_by;
    const GridMeasure emp = from_samples(cs.values, GridSpec::metric());
    const double d = d_weak(emp, cal.mu_bar);
    const double tol = get_real(cfg, "consistency_tol");
    const std::string csv = measure_csv(emp);
    emit("cascade", cfg,
         {{"population_dynamics", cs.population},
          {"recentre_shift", shift_by},
          {"dweak_to_mubar", d},
          {"tol", tol},
          {"pass", d <= tol}},
         &csv);
    return d <= tol ? kPass : kNumericFailure;
}

void block_fields(Schema& s) {
    s.add("b_start", Kind::Real, Json(), "first b on the b1 ladder (auto per model)")
        .add("b_ratio", Kind::Real, 1.5, "geometric b1 ladder ratio")
        .add("b_step", Kind::Real, Json(), "arithmetic b1 ladder step, 0 for geometric (auto per model)")
        .add("b_ladder", Kind::Int, Json(), "b1 ladder length (auto per model)")
        .add("max_N", Kind::Int, Json(), "cap on subblock repetitions (auto per model)")
        .add("ell_max", Kind::Int, 12, "cap on plain steps per subblock");
}

void fill_block_defaults(Json& cfg) {
    const bool cav = is_cavity(cfg);
    if (cfg["b_start"].is_null()) cfg["b_start"] = cav ? 1.0 : 0.25;
    if (cfg["b_step"].is_null()) cfg["b_step"] = cav ? 0.02 : 0.0;
    if (cfg["b_ladder"].is_null()) cfg["b_ladder"] = cav ? 300 : 14;
    if (cfg["max_N"].is_null()) cfg["max_N"] = cav ? 3000 : 400;
}

BlockSearchParams block_params(const Json& cfg) {
    BlockSearchParams p;
    p.b_start = get_real(cfg, "b_start");
    p.b_ratio = get_real(cfg, "b_ratio");
    p.b_step = get_real(cfg, "b_step");
    p.b_ladder = get_int(cfg, "b_ladder");
    p.max_N = get_int(cfg, "max_N");
    p.ell_max = get_int(cfg, "ell_max");
    return p;
}

int run_blocks(Json& cfg) {
    const auto seed = seed_of(cfg);
    fill_block_defaults(cfg);
    Bundle b = make_model(cfg);
    CenterEngine ce(*b.model, b.mu_bar, CenterOptions{}, seed);
    BlockSearchParams p = block_params(cfg);
    p.delta = get_real(cfg, "delta");
    p.delta_prime = get_real(cfg, "delta_prime");
    p.delta_dblprime = cfg["delta_dblprime"].is_null() ? 0.5 * (p.delta + p.delta_prime)
                                                        : get_real(cfg, "delta_dblprime");
    cfg["delta_dblprime"] = p.delta_dblprime;
    p.epsilon = get_real(cfg, "epsilon");
    const auto r = build_block(ce, p, seed);
    emit("blocks", cfg, {{"model_info", b.info}, {"result", to_json(r)}, {"pass", r.epsilon_prime > 0.0}});
    return r.epsilon_prime > 0.0 ? kPass : kNumericFailure;
}

int run_schedule(Json& cfg) {
    const auto seed = seed_of(cfg);
    fill_block_defaults(cfg);
    const bool cav = is_cavity(cfg);
    if (cfg["epsilon_1"].is_null()) cfg["epsilon_1"] = cav ? 0.0 : 0.4;
    if (cfg["delta_ratio"].is_null()) cfg["delta_ratio"] = cav ? 0.7 : 0.5;
    Bundle b = make_model(cfg);
    CenterEngine ce(*b.model, b.mu_bar, CenterOptions{}, seed);
    ScheduleParams sp;
    sp.delta_0 = get_real(cfg, "delta_0");
    sp.epsilon_1 = get_real(cfg, "epsilon_1");
    sp.n_blocks = get_int(cfg, "n_blocks");
    sp.delta_ratio = get_real(cfg, "delta_ratio");
    sp.dblprime_frac = get_real(cfg, "dblprime_frac");
    sp.block = block_params(cfg);
    const auto r = build_schedule(ce, sp, seed);
    Json blocks = Json::array();
    for (const auto& br : r.blocks) blocks.push_back(to_json(br));
    emit("schedule", cfg, {{"model_info", b.info}, {"schedule", to_json(r.schedule)}, {"blocks", blocks}});
    return kPass;
}

CutoffSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read schedule " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        const Json j = Json::parse(ss.str());
        // either a bare schedule or a schedule artifact
        return schedule_from_json(j.contains("schedule") ? j.at("schedule") : j);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

int run_endogeny(Json& cfg) {
    const auto seed = seed_of(cfg);
    const CutoffSchedule s = load_schedule(cfg.at("schedule").get<std::string>());
    if (cfg["horizon"].is_null()) cfg["horizon"] = is_cavity(cfg) ? 2 : 6;
    if (cfg["bivariate_trees"].is_null()) cfg["bivariate_trees"] = cfg["trees"];
    Bundle b = make_model(cfg);

    SandwichParams sp;
    sp.tol = get_real(cfg, "gap_tol");
    sp.n_trees = get_int(cfg, "trees");
    sp.horizon = get_int(cfg, "horizon");
    sp.pass_fraction = get_real(cfg, "pass_fraction");
    sp.seed = seed;
    if (sp.n_trees < 1 || sp.horizon < 0) throw ConfigError("trees must be positive and horizon non-negative");
    const auto sw = sandwich_test(*b.model, b.mu_bar, s, sp);

    const auto depths = get_ints(cfg, "depths");
    for (int d : depths)
        if (d < 0) throw ConfigError("depths must be non-negative");
    const auto biv = bivariate_test(*b.model, b.mu_bar, depths, get_int(cfg, "bivariate_trees"), mix_seed(seed, 7));
    Json per = Json::array();
    std::string csv = "depth,mean_gap,median_gap,p95_gap,dweak_to_mubar\n";
    bool decreasing = true;
    for (std::size_t i = 0; i < biv.size(); ++i) {
        per.push_back(biv[i].to_json());
        csv += std::to_string(biv[i].depth) + "," + num(biv[i].gaps.mean) + "," + num(biv[i].gaps.median) + "," +
               num(biv[i].gaps.p95) + "," + num(biv[i].dweak_roots) + "\n";
        if (i > 0 && !(biv[i].gaps.mean < biv[i - 1].gaps.mean)) decreasing = false;
    }
    const double ratio = biv.size() >= 2 ? biv.back().gaps.mean / biv.front().gaps.mean : std::nan("");

    Json certs{{"deltas", s.deltas}, {"epsilons", s.epsilons}, {"partial_sums", s.partial_sums}};
    if (is_cavity(cfg)) certs["truncation"] = b.info;
    emit("endogeny", cfg,
         {{"per_depth", per},
          {"bivariate", {{"decreasing", decreasing}, {"final_over_initial", real_to_json(ratio)}}},
          {"sandwich", sw.to_json()},
          {"pass", sw.pass},
          {"certificates", certs}},
         &csv);
    return sw.pass ? kPass : kNumericFailure;
}

std::vector<Command> build() {
    std::vector<Command> cs;
    {
        Command c{"assumptions", "check the standing assumptions for a model", {}, run_assumptions};
        model_fields(c.schema);
        c.schema.add("betas", Kind::RealList, Json::array({1.0, 2.0, 4.0}), "decay rates for the Delta check")
            .add("a_ladder", Kind::RealList, Json::array(), "cut-offs for the Delta check (empty: 0..4 by 0.25)")
            .add("center_tol", Kind::Real, 1e-9, "center resolution")
            .add("stationary_tol", Kind::Real, 1e-6, "d_weak tolerance for stationarity");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"solve-metric", "calibrate the critical drift and stationary law", {}, run_solve_metric};
        c.schema.add("graph", Kind::Str, "diamond", "builtin graph name or JSON file")
            .add("sigma", Kind::Real, 0.5, "noise scale")
            .add("alpha", Kind::Real, 0.05, "class quantile level")
            .add("grid", Kind::RealList, Json::array({-40.0, 40.0, 0.01}), "[lo, hi, h]")
            .add("tol", Kind::Real, 1e-13, "wave speed tolerance")
            .add("max_iter", Kind::Int, 2000, "iteration cap")
            .add("stationary_tol", Kind::Real, 1e-6, "d_weak tolerance for stationarity");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"solve-cavity", "solve the cavity fixed point", {}, run_solve_cavity};
        c.schema.add("q", Kind::Real, 2.0, "exponent")
            .add("k", Kind::Int, 1, "order statistic")
            .add("cutoff", Kind::Real, Json(), "cut-off (auto: 24 for q = 1, else 8)")
            .add("tol", Kind::Real, Json(), "tolerance (auto: 1e-5 for q = 1, else 1e-10)")
            .add("max_iter", Kind::Int, 20000, "iteration cap")
            .add("grid", Kind::RealList, Json::array({-30.0, 30.0, 0.005}), "[lo, hi, h], symmetric")
            .add("oracle_tol", Kind::Real, 1e-3, "logistic residual tolerance (q = 1, k = 1)")
            .add("envelope_points", Kind::RealList, Json::array({2.0, 2.5, 3.0}), "tail envelope probes")
            .add("envelope_C", Kind::Real, 10.0, "largest accepted envelope constant")
            .add("certify", Kind::Bool, true, "certify the adapted contraction")
            .add("certify_deltas", Kind::RealList, Json::array({0.05, 0.1, 0.2, 0.4, 0.8}), "delta grid");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"critical-drift", "bisect the drift where cut-off iterates stop collapsing", {},
                  run_critical_drift};
        c.schema.add("graph", Kind::Str, "diamond", "builtin graph name or JSON file")
            .add("sigma", Kind::Real, 0.0, "noise scale")
            .add("bracket", Kind::RealList, Json::array({-1.0, 0.0}), "[s_lo, s_hi]")
            .add("cutoff", Kind::Real, 0.0, "cut-off a")
            .add("tol_s", Kind::Real, 2.5e-4, "bisection width")
            .add("h", Kind::Real, nullptr, "grid step (default 0.001 at sigma 0, else 0.01)")
            .add("window", Kind::Real, nullptr, "grid depth below the cut-off (default 2 at sigma 0, else 20)");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"cascade", "simulate the cascade and compare with the stationary law", {}, run_cascade};
        c.schema.add("graph", Kind::Str, "diamond", "builtin graph name or JSON file")
            .add("sigma", Kind::Real, 0.5, "noise scale")
            .add("alpha", Kind::Real, 0.05, "class quantile level")
            .add("drift", Kind::Real, Json(), "drift (auto: calibrated critical drift)")
            .add("level", Kind::Int, 8, "cascade level")
            .add("samples", Kind::Int, 1000000, "sample count")
            .add("consistency_tol", Kind::Real, 0.02, "d_weak tolerance against the stationary law");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"blocks", "build one certified block", {}, run_blocks};
        model_fields(c.schema);
        c.schema.add("delta", Kind::Real, 0.2, "delta")
            .add("delta_prime", Kind::Real, 0.05, "delta'")
            .add("delta_dblprime", Kind::Real, Json(), "delta'' (auto: midpoint)")
            .add("epsilon", Kind::Real, 0.05, "epsilon");
        block_fields(c.schema);
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"schedule", "build a cut-off schedule from certified blocks", {}, run_schedule};
        model_fields(c.schema);
        c.schema.add("delta_0", Kind::Real, 0.8, "delta_0")
            .add("epsilon_1", Kind::Real, Json(), "epsilon_1, 0 for the smallest admissible (auto per model)")
            .add("n_blocks", Kind::Int, 3, "number of blocks")
            .add("delta_ratio", Kind::Real, Json(), "delta_n = delta_0 ratio^n (auto per model)")
            .add("dblprime_frac", Kind::Real, 0.5, "position of delta'' between delta' and delta");
        block_fields(c.schema);
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    {
        Command c{"endogeny", "sandwich test and bivariate cross-check on sampled trees", {}, run_endogeny};
        model_fields(c.schema);
        c.schema.require("schedule", Kind::Str, "schedule JSON (bare or a schedule artifact)")
            .add("trees", Kind::Int, 200, "trees for the sandwich test")
            .add("bivariate_trees", Kind::Int, Json(), "trees for the bivariate check (auto: trees)")
            .add("depths", Kind::IntList, Json::array({2, 4, 6, 8}), "bivariate depths in tree levels")
            .add("gap_tol", Kind::Real, 0.05, "sandwich gap tolerance")
            .add("pass_fraction", Kind::Real, 0.95, "share of trees within gap_tol")
            .add("horizon", Kind::Int, Json(), "explicit tree depth in steps (auto: 6 diamond, 2 cavity)");
        common_fields(c.schema);
        cs.push_back(std::move(c));
    }
    return cs;
}

}  // namespace

const std::vector<Command>& commands() {
    static const std::vector<Command> cs = build();
    return cs;
}

}  // namespace rdelab::cli
