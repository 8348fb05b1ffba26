// Acceptance suite. Prints one PASS/FAIL line per criterion; with
// --criterion N only that criterion runs. Exit status is 0 iff every criterion
// that ran passed.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "wdbounds/wdbounds.hpp"

#ifndef WDB_CLI_PATH
#error "WDB_CLI_PATH must point at the wdbounds executable"
#endif

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// 1. rate functions
Outcome rate_functions() {
    using big = boost::multiprecision::cpp_bin_float_50;
    constexpr int kPoints = 10000;
    double worst_inverse = 0.0;
    int h_below_h1 = 0;
    for (int i = 0; i < kPoints; ++i) {
        const double x = 100.0 * i / (kPoints - 1);
        worst_inverse = std::max(worst_inverse, std::fabs(wdb::h1_inverse(wdb::bernstein_h1(x)) - x));
        if (wdb::bennett_h(x) < wdb::bernstein_h1(x)) ++h_below_h1;
    }
    const big h1_exact = 2 * boost::multiprecision::log(big(2)) - 1;
    const big h1b_exact = 2 - boost::multiprecision::sqrt(big(3));
    const double err_h = std::fabs(wdb::bennett_h(1.0) - h1_exact.convert_to<double>());
    const double err_h1 = std::fabs(wdb::bernstein_h1(1.0) - h1b_exact.convert_to<double>());
    const bool ok = worst_inverse <= 1e-12 && h_below_h1 == 0 && err_h <= 1e-10 && err_h1 <= 1e-10;
    return {ok, "max|h1^-1(h1(x))-x|=" + fmt(worst_inverse) + ", points with h<h1: " + std::to_string(h_below_h1) +
                    ", |h(1)-ref|=" + fmt(err_h) + ", |h1(1)-ref|=" + fmt(err_h1)};
}

// 2. block selectors
Outcome block_selectors() {
    wdb::Xoshiro256pp gen(0xB10C5E1EC7ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + gen() % 200;
        std::vector<double> delta(n), sigma(n);
        double level = unit(gen);
        for (std::size_t i = 0; i < n; ++i) {
            level *= std::pow(unit(gen), 0.3);
            delta[i] = level;
            sigma[i] = unit(gen) * static_cast<double>(i + 1) / 4.0 * 0.2;
        }
        const double x = 0.05 + 20.0 * unit(gen);
        const wdb::DependenceProfile d(delta, wdb::ProfileKind::linf_type);
        const wdb::VarianceProfile v(sigma, wdb::VarianceSource::estimated);

        std::optional<std::size_t> scan1, scan2;
        for (std::size_t k = 1; k <= n && !scan1; ++k) {
            double env = 0.0;
            for (std::size_t j = k; j <= n; ++j) env = std::max(env, sigma[j - 1]);
            if (static_cast<double>(k) * delta[k - 1] <= env) scan1 = k;
        }
        for (std::size_t k = 1; k <= n && !scan2; ++k)
            if (static_cast<double>(n) * delta[k - 1] <= static_cast<double>(k) * x) scan2 = k;
        if (wdb::select_k_star(d, v).k != scan1) ++mismatches;
        if (wdb::select_k_star_prime(d, n, x).k != scan2) ++mismatches;
    }
    const auto profile = wdb::doubling_map_profile(1000);
    const auto model = wdb::ProcessModel{wdb::DoublingMap{}};
    const auto variance = *wdb::analytic_variance_profile(model, wdb::centered_identity(model), 1000);
    const auto k1 = wdb::select_k_star(profile, variance).k;
    const auto k2 = wdb::select_k_star_prime(profile, 1000, 1.0).k;
    const bool ok = mismatches == 0 && k1 == 1u && k2 == 5u;
    return {ok, "oracle mismatches " + std::to_string(mismatches) + "/2000; doubling n=1000 x=1: k*=" +
                    (k1 ? std::to_string(*k1) : "none") + ", k*'=" + (k2 ? std::to_string(*k2) : "none")};
}

// 3. analytic variance oracle versus Monte Carlo
Outcome analytic_variance() {
    const wdb::ProcessModel model = wdb::DoublingMap{};
    const auto f = wdb::centered_identity(model);
    auto direct = [](std::size_t k) {
        double s = 0.0;
        for (std::size_t r = 1; r < k; ++r) s += static_cast<double>(k - r) * std::ldexp(1.0, -static_cast<int>(r));
        return (1.0 + 2.0 / static_cast<double>(k) * s) / 12.0;
    };
    const double s5 = *wdb::analytic_sigma_sq(model, f, 5);
    const double far = *wdb::analytic_sigma_sq(model, f, 10000000);
    bool ok = std::fabs(s5 - 0.18541666666666667) <= 1e-12 && std::fabs(s5 - direct(5)) <= 1e-15 &&
              std::fabs(far - 0.25) <= 1e-6;
    std::string detail = "sigma_5^2=" + fmt(s5) + ", sigma_1e7^2=" + fmt(far) + "; MC z-scores:";
    const std::vector<std::size_t> ks{1, 2, 5, 16, 64};
    const auto est = wdb::estimate_sigma_profile(model, f, ks, 100000, 0xACCE973ULL, wdb::default_threads());
    for (const auto& e : est) {
        const double z = (e.sigma_sq_hat - direct(e.k)) / e.std_error;
        ok = ok && std::fabs(z) <= 4.0;
        detail += " k=" + std::to_string(e.k) + ":" + fmt(z);
    }
    return {ok, detail};
}

// 4. variance envelope from the dependence profile
Outcome variance_envelope_bound() {
    const wdb::ProcessModel model = wdb::DoublingMap{};
    const auto f = wdb::centered_identity(model);
    const auto profile = wdb::doubling_map_profile(64);
    std::size_t violations = 0, first = 0;
    double worst_gap = 0.0;
    for (std::size_t k = 1; k <= 64; ++k) {
        const double bound = wdb::varest_bound(1.0 / 12.0, 0.25, profile, k);
        const double exact = *wdb::analytic_sigma_sq(model, f, k);
        if (bound < exact) {
            if (violations++ == 0) first = k;
            worst_gap = std::max(worst_gap, exact - bound);
        }
    }
    const double at5 = wdb::varest_bound(1.0 / 12.0, 0.25, profile, 5);
    std::string detail = "k=5: " + fmt(at5) + " >= " + fmt(*wdb::analytic_sigma_sq(model, f, 5));
    if (violations > 0)
        detail += "; bound below sigma_k^2 for " + std::to_string(violations) + " of 64 k (first k=" +
                  std::to_string(first) + ", largest shortfall " + fmt(worst_gap) +
                  "); with r*delta_r=(4/9)2^-r the bound tends to 1/12+(2/9)ln2=" + fmt(1.0 / 12.0 + 2.0 / 9.0 * std::log(2.0)) +
                  " while sigma_k^2 -> 1/4";
    return {violations == 0, detail};
}

wdb::ExperimentConfig doubling_config(wdb::Theorem th) {
    wdb::ExperimentConfig c;
    c.model = wdb::DoublingMap{};
    c.n = 1000;
    c.x_grid = {0.5, 1.0, 2.0};
    c.theorems = {th};
    c.reps = 100000;
    c.base_seed = 0x7A11ULL;
    c.alpha = 0.01;
    return c;
}

std::string describe(const std::vector<wdb::ReportRow>& rows, bool& ok) {
    std::string s;
    for (const auto& r : rows) {
        ok = ok && r.verdict == wdb::Verdict::pass;
        s += std::string(s.empty() ? "" : "; ") + wdb::to_string(r.theorem) + " x=" + fmt(r.x) +
             " k=" + (r.k_selected ? std::to_string(*r.k_selected) : "-") +
             " t=" + (r.threshold ? fmt(*r.threshold) : "-") + " p=" + (r.p_hat ? fmt(*r.p_hat) : "-") +
             " ci_high=" + (r.ci_high ? fmt(*r.ci_high) : "-") + " " + wdb::to_string(r.verdict);
    }
    return s;
}

// 5. Bernstein-type bound under the phi condition
Outcome bound_validity_thm1() {
    bool ok = true;
    const auto res = wdb::run_verification(doubling_config(wdb::Theorem::thm1), wdb::default_threads());
    const auto s = describe(res.rows, ok);
    return {ok && res.rows.size() == 3, s};
}

// 6. Bennett-type bound under the coupling condition, plus the iid baseline
Outcome bound_validity_thm2() {
    bool ok = true;
    const auto res = wdb::run_verification(doubling_config(wdb::Theorem::thm2), wdb::default_threads());
    auto iid = doubling_config(wdb::Theorem::iid_eq1);
    iid.model = wdb::IidUniform{};
    const auto base = wdb::run_verification(iid, wdb::default_threads());
    const bool iid_variance = !base.rows.empty() && base.rows[0].variance_used &&
                              std::fabs(*base.rows[0].variance_used - 1.0 / 12.0) <= 1e-15;
    const auto s = describe(res.rows, ok) + "; " + describe(base.rows, ok);
    return {ok && iid_variance && res.rows.size() == 3 && base.rows.size() == 3, s};
}

// 7. almost-sure coupling contraction for the doubling map
Outcome coupling_contraction() {
    const wdb::ProcessModel model = wdb::DoublingMap{};
    std::vector<std::size_t> rs;
    for (std::size_t r = 1; r <= 20; ++r) rs.push_back(r);
    const std::vector<std::size_t> js{1, 100, 500};
    const auto est = wdb::estimate_coupling_delta(model, rs, js, 10000, 0xC0C0ULL, wdb::default_threads());
    bool ok = true;
    std::size_t above_reference = 0;
    for (const auto& e : est) {
        const double bound = std::ldexp(1.0, 1 - static_cast<int>(e.r));
        const double reference = 4.0 / 9.0 * std::ldexp(1.0, -static_cast<int>(e.r));
        for (double m : e.max_per_j) ok = ok && m <= bound;
        if (e.max_distance_sum > reference) ++above_reference;
    }
    return {ok, "max distance sum <= 2^(1-r) for r=1..20, j in {1,100,500}, 10^4 blocks each; informational: "
                    "(4/9)2^-r exceeded at " + std::to_string(above_reference) + " of 20 r"};
}

// 8. Bennett reduction at zero dependence
Outcome bennett_reduction() {
    // classical Bennett: P(S >= t) <= exp(-(V/b^2) h(b t / V)) with V = 2 n sigma^2, b = 1
    auto h = [](long double u) { return (1.0L + u) * std::log1p(u) - u; };
    auto classical = [&](double V, double b, double t) {
        return static_cast<double>(std::exp(-(static_cast<long double>(V) / (b * b)) * h(b * t / static_cast<long double>(V))));
    };
    double worst = 0.0;
    int points = 0;
    for (std::size_t n : {1u, 7u, 100u, 1000u, 100000u})
        for (double s2 : {0.001, 0.02, 0.1, 0.25})
            for (double x : {0.0, 0.01, 0.5, 3.0, 40.0, 900.0}) {
                const double ours = wdb::thm2_bennett_tail(n, 1, s2, 0.0, x);
                worst = std::max(worst, std::fabs(ours - classical(2.0 * static_cast<double>(n) * s2, 1.0, x)));
                ++points;
            }
    return {worst <= 1e-12, std::to_string(points) + " grid points, max |difference| = " + fmt(worst)};
}

// 9. block-size asymptotics for geometric decay
Outcome asymptotics() {
    wdb::DeltaFamily fam;
    fam.kind = wdb::DeltaFamily::Kind::geometric;
    fam.C = 1.0;
    fam.rate = 0.5;
    std::vector<double> vs;
    for (int m = 2; m <= 8; ++m) vs.push_back(std::pow(10.0, -m));
    const auto rows = wdb::run_blocksize_asymptotics(fam, vs);
    const double spread = wdb::ratio_spread(rows);
    std::string detail = "k*/ln(1/v):";
    for (const auto& r : rows) detail += " " + fmt(r.ratio);
    detail += "; spread " + fmt(spread);
    return {spread <= 0.2, detail};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 10. end-to-end determinism through the CLI
Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("wdbounds_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> configs{
        {"analytic", R"({"model": {"variant": "doubling_map"}, "observable": "centered_identity", "n": 1000,
            "x_grid": [0.5, 1, 2], "theorem": ["iid_eq1", "thm1", "thm2", "hoeffding"], "reps": 20000,
            "base_seed": 11, "alpha": 0.01})"},
        {"estimated", R"({"model": {"variant": "lipschitz_kernel_chain", "kappa": 0.6},
            "observable": {"id": "centered_cosine", "omega": 2}, "n": 300, "x_grid": [1, 2, 4],
            "theorem": ["thm1", "thm2"], "reps": 20000, "variance_reps": 3000, "base_seed": 12})"}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, text] : configs) {
        const fs::path cfg = dir / (name + ".json");
        std::ofstream(cfg) << text;
        std::vector<std::string> outputs;
        for (int threads : {1, 1, 8, 8}) {
            const fs::path out = dir / (name + "_" + std::to_string(outputs.size()) + ".csv");
            const std::string cmd = std::string("\"") + WDB_CLI_PATH + "\" verify --config \"" + cfg.string() +
                                    "\" --threads " + std::to_string(threads) + " --out \"" + out.string() + "\" 2>/dev/null";
            const int status = std::system(cmd.c_str());
            if (status == -1 || !fs::exists(out)) ok = false;
            outputs.push_back(slurp(out));
        }
        bool same = !outputs[0].empty();
        for (const auto& o : outputs) same = same && o == outputs[0];
        ok = ok && same;
        detail += std::string(detail.empty() ? "" : "; ") + name + " variance: " +
                  (same ? "identical" : "DIFFERENT") + " across 1,1,8,8 threads (" + std::to_string(outputs[0].size()) + " bytes)";
    }
    fs::remove_all(dir);
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "rate functions", rate_functions},
        {2, "block selectors", block_selectors},
        {3, "analytic variance oracle", analytic_variance},
        {4, "variance envelope from dependence profile", variance_envelope_bound},
        {5, "Bernstein-type bound validity (phi condition)", bound_validity_thm1},
        {6, "Bennett-type bound validity (coupling condition) and iid baseline", bound_validity_thm2},
        {7, "coupling contraction", coupling_contraction},
        {8, "Bennett reduction", bennett_reduction},
        {9, "block-size asymptotics", asymptotics},
        {10, "determinism", determinism},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2d %s %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::cerr << "no criterion " << only << "\n";
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
