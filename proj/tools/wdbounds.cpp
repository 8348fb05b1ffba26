// wdbounds: command-line front end for the bound formulas, dependence
// profiles, simulators, Monte Carlo estimators and verification runs.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wdbounds/wdbounds.hpp"

namespace {

using wdb::json;

struct Common {
    std::string model = "doubling";
    std::string observable = "identity";
    std::size_t n = 1000;
    std::string x_grid = "0.5,1,2";
    std::size_t reps = 10000;
    std::uint64_t seed = 1;
    double alpha = wdb::kDefaultAlpha;
    std::string out;
    std::size_t threads = wdb::default_threads();
};

// Writes to --out when given, otherwise to stdout.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    auto os = wdb::open_output(path);
    fn(os);
    os.flush();
    wdb::check_stream(os, path);
}

std::vector<std::size_t> parse_index_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty() || item[0] == '-' || v == 0)
            throw wdb::ConfigError(what, "expected a comma list of positive integers, got '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty()) throw wdb::ConfigError(what, "cannot parse '" + item + "'");
        out.push_back(v);
    }
    return out;
}

wdb::ProcessModel cli_model(const Common& c) { return wdb::parse_model(wdb::model_json_from_cli(c.model)); }

wdb::ObservableF cli_observable(const wdb::ProcessModel& model, const Common& c) {
    return wdb::make_observable(model, wdb::parse_observable(wdb::observable_json_from_cli(c.observable)),
                                wdb::derive_seed(c.seed, 2));
}

void note_truncation(const wdb::ProcessModel& model) {
    const double err = wdb::truncation_error(model);
    if (err > 0.0)
        std::cerr << "note: " << wdb::model_name(model) << " simulated with truncated memory, tail weight "
                  << wdb::format_double(err) << "\n";
}

void add_model_flags(CLI::App* app, Common& c) {
    app->add_option("--model", c.model,
                    "iid | doubling | kernel:kappa=K | shift:theta=T[,truncation=M] | "
                    "infmem:law=geometric|power,scale=S,rate=R[,truncation=M]")
        ->capture_default_str();
}

void add_threads_flag(CLI::App* app, Common& c) {
    app->add_option("--threads", c.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

// Explicit profile families that are not simulated process models.
std::optional<wdb::DependenceProfile> named_profile(const std::string& text, std::size_t n) {
    const auto obj = wdb::model_json_from_cli(text);
    const auto name = obj.at("variant").get<std::string>();
    auto num = [&](const char* key) {
        if (!obj.contains(key) || !obj.at(key).is_number()) throw wdb::ConfigError(std::string("model.") + key, "missing number");
        return obj.at(key).get<double>();
    };
    auto reject_extra = [&](std::initializer_list<const char*> allowed) { wdb::detail::reject_unknown_keys(obj, allowed, "model"); };
    if (name == "expanding") {
        reject_extra({"variant", "C", "rho"});
        return wdb::expanding_map_profile(num("C"), num("rho"), n);
    }
    if (name == "markov") {
        reject_extra({"variant", "kappa"});
        return wdb::markov_contraction_profile(num("kappa"), n);
    }
    return std::nullopt;
}

int run_bounds(const Common& c, const std::vector<std::string>& theorems, std::optional<std::size_t> variance_reps) {
    wdb::ExperimentConfig cfg;
    cfg.model = cli_model(c);
    cfg.observable = wdb::parse_observable(wdb::observable_json_from_cli(c.observable));
    cfg.n = c.n;
    cfg.x_grid = wdb::parse_x_grid(c.x_grid);
    wdb::validate_x_grid(cfg.x_grid);
    cfg.theorems.clear();
    for (const auto& t : theorems) cfg.theorems.push_back(wdb::parse_theorem(t));
    cfg.reps = c.reps;
    cfg.base_seed = c.seed;
    cfg.variance_reps = variance_reps;
    const auto f = wdb::make_observable(cfg.model, cfg.observable, wdb::derive_seed(cfg.base_seed, 2));
    const auto result = wdb::evaluate_bounds(cfg, f, c.threads);
    note_truncation(cfg.model);
    with_output(c.out, [&](std::ostream& os) {
        wdb::write_csv_row(os, {"theorem", "x", "k_selected", "variance_used", "threshold", "bound_value", "variance_source"});
        auto opt = [](const std::optional<double>& v) { return v ? wdb::format_double(*v) : std::string(); };
        for (const auto& r : result.rows)
            wdb::write_csv_row(os, {wdb::to_string(r.theorem), wdb::format_double(r.x),
                                    r.k_selected ? std::to_string(*r.k_selected) : "", opt(r.variance_used),
                                    opt(r.threshold), wdb::format_double(r.bound_value), r.variance_source});
    });
    return 0;
}

int run_profile(const Common& c) {
    auto profile = named_profile(c.model, c.n);
    if (!profile) profile = wdb::dependence_profile_for(cli_model(c), c.n);
    with_output(c.out, [&](std::ostream& os) { wdb::write_profile_csv(os, *profile); });
    return 0;
}

int run_simulate(const Common& c, std::optional<std::size_t> coupled_j, std::optional<std::size_t> coupled_r,
                 bool share_prefix) {
    const auto model = cli_model(c);
    note_truncation(model);
    if (coupled_j || coupled_r) {
        if (!coupled_j || !coupled_r) throw wdb::ConfigError("coupled", "--coupled-j and --coupled-r go together");
        wdb::CouplingOptions opts;
        opts.share_prefix = share_prefix;
        const auto block = wdb::simulate_coupled_block(model, *coupled_j, *coupled_r, c.seed, opts);
        with_output(c.out, [&](std::ostream& os) { wdb::write_coupled_block_csv(os, block); });
        return 0;
    }
    const auto xs = wdb::simulate(model, c.n, c.seed);
    with_output(c.out, [&](std::ostream& os) { wdb::write_trajectory_csv(os, xs); });
    return 0;
}

int run_estimate_variance(const Common& c, const std::string& k_list, bool with_tail) {
    const auto model = cli_model(c);
    const auto f = cli_observable(model, c);
    note_truncation(model);
    const auto ks = parse_index_list(k_list, "k-list");
    const auto est = wdb::estimate_sigma_profile(model, f, ks, c.reps, c.seed, c.threads);
    const auto mean_abs = wdb::estimate_mean_abs_f(model, f, c.reps, wdb::derive_seed(c.seed, 3), c.threads);
    with_output(c.out, [&](std::ostream& os) {
        wdb::write_estimation_header(os);
        const auto mname = wdb::model_name(model);
        const auto fname = wdb::observable_name(f);
        for (const auto& e : est) {
            wdb::EstimationRow row{mname, fname, e.k, "sigma_sq", e.sigma_sq_hat, e.std_error, std::nullopt, e.reps, c.seed};
            wdb::write_estimation_row(os, row);
            if (const auto exact = wdb::analytic_sigma_sq(model, f, e.k))
                wdb::write_estimation_row(os, {mname, fname, e.k, "sigma_sq_analytic", *exact, std::nullopt, std::nullopt, 0, 0});
        }
        wdb::write_estimation_row(os, {mname, fname, 1, "mean_abs_f", mean_abs.value, mean_abs.std_error, std::nullopt,
                                       mean_abs.reps, wdb::derive_seed(c.seed, 3)});
        if (with_tail) {
            const auto xs = wdb::parse_x_grid(c.x_grid);
            wdb::validate_x_grid(xs);
            const auto sums = wdb::sample_partial_sums(model, f, c.n, c.reps, wdb::derive_seed(c.seed, 1), c.threads);
            for (double t : xs) {
                const auto tail = wdb::tail_from_sums(sums, t, c.alpha);
                wdb::write_estimation_row(os, {mname, fname, c.n, "tail_prob(S>=" + wdb::format_double(t) + ")",
                                               tail.p_hat, tail.ci_low, tail.ci_high, tail.reps, wdb::derive_seed(c.seed, 1)});
            }
        }
    });
    return 0;
}

int run_estimate_coupling(const Common& c, const std::string& r_list, const std::string& j_list) {
    const auto model = cli_model(c);
    note_truncation(model);
    const auto rs = parse_index_list(r_list, "r-list");
    const auto js = parse_index_list(j_list, "j-list");
    const auto est = wdb::estimate_coupling_delta(model, rs, js, c.reps, c.seed, c.threads);
    const auto profile = wdb::dependence_profile_for(model, *std::max_element(rs.begin(), rs.end()));
    with_output(c.out, [&](std::ostream& os) {
        wdb::write_estimation_header(os);
        const auto mname = wdb::model_name(model);
        for (const auto& e : est) {
            wdb::write_estimation_row(os, {mname, "", e.r, "coupling_delta_hat", e.delta_hat, std::nullopt, std::nullopt,
                                           e.reps, c.seed});
            wdb::write_estimation_row(os, {mname, "", e.r, "coupling_delta_profile", profile(e.r), std::nullopt,
                                           std::nullopt, 0, 0});
        }
    });
    return 0;
}

int run_verify(Common c, const std::string& config_path, const std::vector<std::string>& theorems,
               std::optional<std::size_t> variance_reps, const CLI::App& sub) {
    wdb::ExperimentConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw wdb::ConfigError("", std::string("invalid JSON in '") + config_path + "': " + e.what());
        }
        cfg = wdb::parse_config(doc);
        if (c.out.empty()) c.out = cfg.output;
        // explicit flags override the file
        if (sub.count("--reps")) cfg.reps = c.reps;
        if (sub.count("--seed")) cfg.base_seed = c.seed;
        if (sub.count("--alpha")) cfg.alpha = c.alpha;
    } else {
        cfg.model = cli_model(c);
        cfg.observable = wdb::parse_observable(wdb::observable_json_from_cli(c.observable));
        cfg.n = c.n;
        cfg.x_grid = wdb::parse_x_grid(c.x_grid);
        cfg.theorems.clear();
        for (const auto& t : theorems) cfg.theorems.push_back(wdb::parse_theorem(t));
        cfg.reps = c.reps;
        cfg.base_seed = c.seed;
        cfg.alpha = c.alpha;
        cfg.variance_reps = variance_reps;
        cfg.output = c.out;
    }
    const auto result = wdb::run_verification(cfg, c.threads);
    note_truncation(cfg.model);
    with_output(c.out, [&](std::ostream& os) { wdb::write_report(os, result.rows); });
    std::size_t failed = 0;
    for (const auto& r : result.rows) failed += r.verdict == wdb::Verdict::fail;
    if (failed > 0) std::cerr << failed << " row(s) failed\n";
    return failed > 0 ? 1 : 0;
}

int run_asymptotics(const Common& c, const std::string& family, double C, double rate, const std::string& targets) {
    wdb::DeltaFamily fam;
    if (family == "geometric") fam.kind = wdb::DeltaFamily::Kind::geometric;
    else if (family == "polynomial") fam.kind = wdb::DeltaFamily::Kind::polynomial;
    else throw wdb::ConfigError("family", "expected geometric or polynomial");
    fam.C = C;
    fam.rate = rate;
    std::vector<double> vs;
    if (targets.empty()) {
        for (int m = 2; m <= 8; ++m) vs.push_back(std::pow(10.0, -m));
    } else {
        vs = parse_real_list(targets, "targets");
    }
    const auto rows = wdb::run_blocksize_asymptotics(fam, vs);
    with_output(c.out, [&](std::ostream& os) { wdb::write_asymptotics(os, fam, rows); });
    std::cerr << "ratio spread (max/min - 1): " << wdb::format_double(wdb::ratio_spread(rows)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deviation bounds for weakly dependent sums, with Monte Carlo validation"};
    app.require_subcommand(1);
    Common c;

    auto* bounds = app.add_subcommand("bounds", "evaluate thresholds over an x grid (no simulation)");
    std::vector<std::string> bound_theorems{"iid_eq1", "thm1", "thm2", "hoeffding"};
    std::optional<std::size_t> variance_reps;
    add_model_flags(bounds, c);
    bounds->add_option("--observable", c.observable, "identity | cosine:omega=W")->capture_default_str();
    bounds->add_option("--n", c.n, "sample size")->capture_default_str()->check(CLI::PositiveNumber);
    bounds->add_option("--x-grid", c.x_grid, "comma list or start:stop:step")->capture_default_str();
    bounds->add_option("--theorem", bound_theorems, "iid_eq1, thm1, thm2, hoeffding")->delimiter(',');
    bounds->add_option("--reps", c.reps, "replications for Monte Carlo variance fallback")->capture_default_str();
    bounds->add_option("--variance-reps", variance_reps, "replications for Monte Carlo variance");
    bounds->add_option("--seed", c.seed, "base seed")->capture_default_str();
    bounds->add_option("--out", c.out, "output CSV (default stdout)");
    add_threads_flag(bounds, c);

    auto* profile = app.add_subcommand("profile", "emit a dependence-coefficient profile");
    add_model_flags(profile, c);
    profile->add_option("--n", c.n, "profile length")->capture_default_str()->check(CLI::PositiveNumber);
    profile->add_option("--out", c.out, "output CSV (default stdout)");
    profile->footer("Also accepts --model expanding:C=..,rho=.. and --model markov:kappa=..");

    auto* simulate = app.add_subcommand("simulate", "simulate a stationary trajectory or a coupled block");
    std::optional<std::size_t> coupled_j, coupled_r;
    bool share_prefix = false;
    add_model_flags(simulate, c);
    simulate->add_option("--n", c.n, "trajectory length")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", c.seed, "seed")->capture_default_str();
    simulate->add_option("--coupled-j", coupled_j, "split index j of a coupled block");
    simulate->add_option("--coupled-r", coupled_r, "block length r of a coupled block");
    simulate->add_flag("--share-prefix", share_prefix, "run both pasts from the same stream");
    simulate->add_option("--out", c.out, "output CSV (default stdout)");

    auto* estvar = app.add_subcommand("estimate-variance", "Monte Carlo sigma_k^2, E|f| and optional tail rows");
    std::string k_list = "1,2,5,16,64";
    bool with_tail = false;
    add_model_flags(estvar, c);
    estvar->add_option("--observable", c.observable, "identity | cosine:omega=W")->capture_default_str();
    estvar->add_option("--k-list", k_list, "block lengths")->capture_default_str();
    estvar->add_option("--reps", c.reps, "replications")->capture_default_str()->check(CLI::Range(2ULL, ~0ULL));
    estvar->add_option("--seed", c.seed, "base seed")->capture_default_str();
    estvar->add_option("--alpha", c.alpha, "Clopper-Pearson level for tail rows")->capture_default_str();
    estvar->add_option("--n", c.n, "sample size for tail rows")->capture_default_str()->check(CLI::PositiveNumber);
    estvar->add_option("--x-grid", c.x_grid, "thresholds for tail rows")->capture_default_str();
    estvar->add_flag("--tail", with_tail, "also estimate P(S >= t) for t in --x-grid");
    estvar->add_option("--out", c.out, "output CSV (default stdout)");
    add_threads_flag(estvar, c);

    auto* estcpl = app.add_subcommand("estimate-coupling", "Monte Carlo coupling distances");
    std::string r_list = "1,2,4,8,16", j_list = "1,100,500";
    add_model_flags(estcpl, c);
    estcpl->add_option("--r-list", r_list, "block lengths")->capture_default_str();
    estcpl->add_option("--j-list", j_list, "split indices")->capture_default_str();
    estcpl->add_option("--reps", c.reps, "coupled blocks per (r, j)")->capture_default_str()->check(CLI::PositiveNumber);
    estcpl->add_option("--seed", c.seed, "base seed")->capture_default_str();
    estcpl->add_option("--out", c.out, "output CSV (default stdout)");
    add_threads_flag(estcpl, c);

    auto* verify = app.add_subcommand("verify", "bound-versus-simulation report");
    std::string config_path;
    std::vector<std::string> verify_theorems{"thm1"};
    add_model_flags(verify, c);
    verify->add_option("--config", config_path, "JSON experiment config");
    verify->add_option("--observable", c.observable, "identity | cosine:omega=W")->capture_default_str();
    verify->add_option("--n", c.n, "sample size")->capture_default_str()->check(CLI::PositiveNumber);
    verify->add_option("--x-grid", c.x_grid, "comma list or start:stop:step")->capture_default_str();
    verify->add_option("--theorem", verify_theorems, "iid_eq1, thm1, thm2, hoeffding")->delimiter(',');
    verify->add_option("--reps", c.reps, "replications")->capture_default_str()->check(CLI::PositiveNumber);
    verify->add_option("--variance-reps", variance_reps, "replications for Monte Carlo variance");
    verify->add_option("--seed", c.seed, "base seed")->capture_default_str();
    verify->add_option("--alpha", c.alpha, "two-sided Clopper-Pearson level")->capture_default_str();
    verify->add_option("--out", c.out, "report CSV (default: config output, else stdout)");
    add_threads_flag(verify, c);

    auto* asym = app.add_subcommand("asymptotics", "k*(v) for geometric or polynomial decay");
    std::string family = "geometric", targets;
    double fam_c = 1.0, fam_rate = 0.5;
    asym->add_option("--family", family, "geometric | polynomial")->capture_default_str();
    asym->add_option("--C", fam_c, "constant C")->capture_default_str();
    asym->add_option("--rate", fam_rate, "geometric ratio in (0,1) or polynomial exponent > 1")->capture_default_str();
    asym->add_option("--targets", targets, "decreasing target variances (default 1e-2..1e-8)");
    asym->add_option("--out", c.out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bounds) return run_bounds(c, bound_theorems, variance_reps);
        if (*profile) return run_profile(c);
        if (*simulate) return run_simulate(c, coupled_j, coupled_r, share_prefix);
        if (*estvar) return run_estimate_variance(c, k_list, with_tail);
        if (*estcpl) return run_estimate_coupling(c, r_list, j_list);
        if (*verify) return run_verify(c, config_path, verify_theorems, variance_reps, *verify);
        if (*asym) return run_asymptotics(c, family, fam_c, fam_rate, targets);
    } catch (const wdb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
