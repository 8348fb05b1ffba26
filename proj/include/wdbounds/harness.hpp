#pragma once

// Experiment orchestration: configuration, bound-versus-simulation runs,
// block-size asymptotics and report emission.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wdbounds/bounds.hpp"
#include "wdbounds/coefficients.hpp"
#include "wdbounds/estimation.hpp"
#include "wdbounds/io.hpp"
#include "wdbounds/processes.hpp"

namespace wdb {

using nlohmann::json;

// Configuration problem tied to a field of the JSON document (dotted path).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class Theorem { iid_eq1, thm1, thm2, hoeffding };

inline const char* to_string(Theorem t) {
    switch (t) {
        case Theorem::iid_eq1: return "iid_eq1";
        case Theorem::thm1: return "thm1";
        case Theorem::thm2: return "thm2";
        case Theorem::hoeffding: return "hoeffding";
    }
    return "?";
}

inline Theorem parse_theorem(const std::string& s, const std::string& field = "theorem") {
    if (s == "iid_eq1") return Theorem::iid_eq1;
    if (s == "thm1") return Theorem::thm1;
    if (s == "thm2") return Theorem::thm2;
    if (s == "hoeffding") return Theorem::hoeffding;
    throw ConfigError(field, "unknown theorem '" + s + "' (expected iid_eq1, thm1, thm2 or hoeffding)");
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.contains(key)) throw ConfigError(field, "missing");
    return obj.at(key);
}

inline double get_number(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) throw ConfigError(path.empty() ? key : path + "." + key, "expected a number");
    return v.get<double>();
}

inline std::uint64_t get_unsigned(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw ConfigError(path.empty() ? key : path + "." + key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

}  // namespace detail

inline WeightSequence parse_weights(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const auto& law = detail::require(j, "law", path);
    if (!law.is_string()) throw ConfigError(detail::join(path, "law"), "expected a string");
    const auto name = law.get<std::string>();
    try {
        if (name == "geometric") {
            detail::reject_unknown_keys(j, {"law", "scale", "rate"}, path);
            return WeightSequence::geometric(detail::get_number(j, "scale", path), detail::get_number(j, "rate", path));
        }
        if (name == "power") {
            detail::reject_unknown_keys(j, {"law", "scale", "rate"}, path);
            return WeightSequence::power_law(detail::get_number(j, "scale", path), detail::get_number(j, "rate", path));
        }
        if (name == "finite") {
            detail::reject_unknown_keys(j, {"law", "terms"}, path);
            const auto& terms = detail::require(j, "terms", path);
            if (!terms.is_array()) throw ConfigError(detail::join(path, "terms"), "expected an array");
            return WeightSequence::finite(terms.get<std::vector<double>>());
        }
    } catch (const std::domain_error& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(detail::join(path, "law"), "unknown law '" + name + "' (expected geometric, power or finite)");
}

// A model is either a bare variant name or {"variant": name, parameters...}.
inline ProcessModel parse_model(const json& j, const std::string& path = "model") {
    json obj = j;
    if (j.is_string()) obj = json{{"variant", j.get<std::string>()}};
    if (!obj.is_object()) throw ConfigError(path, "expected a string or an object");
    const auto& v = detail::require(obj, "variant", path);
    if (!v.is_string()) throw ConfigError(detail::join(path, "variant"), "expected a string");
    const auto name = v.get<std::string>();
    try {
        if (name == "iid_uniform") {
            detail::reject_unknown_keys(obj, {"variant"}, path);
            return IidUniform{};
        }
        if (name == "doubling_map") {
            detail::reject_unknown_keys(obj, {"variant"}, path);
            return DoublingMap{};
        }
        if (name == "lipschitz_kernel_chain") {
            detail::reject_unknown_keys(obj, {"variant", "kappa"}, path);
            return make_kernel_chain(detail::get_number(obj, "kappa", path));
        }
        if (name == "bernoulli_shift_geometric") {
            detail::reject_unknown_keys(obj, {"variant", "theta", "truncation"}, path);
            const std::size_t m = obj.contains("truncation") ? detail::get_unsigned(obj, "truncation", path) : 0;
            return make_bernoulli_shift(detail::get_number(obj, "theta", path), m);
        }
        if (name == "infinite_memory_chain") {
            detail::reject_unknown_keys(obj, {"variant", "weights", "truncation"}, path);
            const std::size_t m = obj.contains("truncation") ? detail::get_unsigned(obj, "truncation", path) : 0;
            return make_infinite_memory_chain(parse_weights(detail::require(obj, "weights", path), detail::join(path, "weights")), m);
        }
    } catch (const std::domain_error& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(detail::join(path, "variant"), "unknown variant '" + name + "'");
}

struct ObservableSpec {
    ObservableF::Kind kind = ObservableF::Kind::centered_identity;
    int omega = 1;
};

inline ObservableSpec parse_observable(const json& j, const std::string& path = "observable") {
    json obj = j;
    if (j.is_string()) obj = json{{"id", j.get<std::string>()}};
    if (!obj.is_object()) throw ConfigError(path, "expected a string or an object");
    const auto& id = detail::require(obj, "id", path);
    if (!id.is_string()) throw ConfigError(detail::join(path, "id"), "expected a string");
    const auto name = id.get<std::string>();
    if (name == "centered_identity") {
        detail::reject_unknown_keys(obj, {"id"}, path);
        return {ObservableF::Kind::centered_identity, 1};
    }
    if (name == "centered_cosine") {
        detail::reject_unknown_keys(obj, {"id", "omega"}, path);
        const auto omega = obj.contains("omega") ? detail::get_unsigned(obj, "omega", path) : 1;
        if (omega == 0 || omega > 1000000) throw ConfigError(detail::join(path, "omega"), "must be a positive integer");
        return {ObservableF::Kind::centered_cosine, static_cast<int>(omega)};
    }
    throw ConfigError(detail::join(path, "id"), "unknown observable '" + name + "'");
}

inline ObservableF make_observable(const ProcessModel& model, const ObservableSpec& obs, std::uint64_t seed = 0x5EEDC05ULL) {
    if (obs.kind == ObservableF::Kind::centered_cosine) return centered_cosine(model, obs.omega, 200000, seed);
    return centered_identity(model);
}

// "name" or "name:key=value,key=value" into the JSON object form. Short
// aliases: iid, doubling, kernel, shift, infmem; infmem takes law, scale,
// rate (weights) and truncation.
inline json model_json_from_cli(const std::string& text) {
    const auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    if (name == "iid") name = "iid_uniform";
    if (name == "doubling") name = "doubling_map";
    if (name == "kernel") name = "lipschitz_kernel_chain";
    if (name == "shift") name = "bernoulli_shift_geometric";
    if (name == "infmem") name = "infinite_memory_chain";
    json obj{{"variant", name}};
    json weights;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("model", "expected key=value, got '" + item + "'");
            const std::string key = item.substr(0, eq);
            const std::string value = item.substr(eq + 1);
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;
            }
            if (key == "law" || key == "scale" || key == "rate") weights[key] = parsed;
            else obj[key] = parsed;
        }
    }
    if (!weights.is_null()) obj["weights"] = weights;
    return obj;
}

inline json observable_json_from_cli(const std::string& text) {
    const auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    if (name == "identity") name = "centered_identity";
    if (name == "cosine") name = "centered_cosine";
    json obj{{"id", name}};
    if (colon != std::string::npos) {
        const std::string rest = text.substr(colon + 1);
        const auto eq = rest.find('=');
        if (eq == std::string::npos || rest.substr(0, eq) != "omega")
            throw ConfigError("observable", "expected omega=<integer>");
        try {
            obj["omega"] = json::parse(rest.substr(eq + 1));
        } catch (const json::parse_error&) {
            throw ConfigError("observable.omega", "expected an integer");
        }
    }
    return obj;
}

// "0.5,1,2" or "start:stop:step" (inclusive of stop up to round-off).
inline std::vector<double> parse_x_grid(const std::string& s) {
    std::vector<double> xs;
    auto to_double = [](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw ConfigError("x_grid", "cannot parse '" + t + "'");
        }
        if (used != t.size()) throw ConfigError("x_grid", "cannot parse '" + t + "'");
        return v;
    };
    if (s.find(':') != std::string::npos) {
        std::stringstream ss(s);
        std::string a, b, c;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
            throw ConfigError("x_grid", "range must be start:stop:step");
        const double start = to_double(a), stop = to_double(b), step = to_double(c);
        if (!(step > 0.0)) throw ConfigError("x_grid", "range step must be positive");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (stop < start) throw ConfigError("x_grid", "range stop below start");
        for (std::size_t i = 0; i < count; ++i) xs.push_back(start + static_cast<double>(i) * step);
    } else if (!s.empty()) {
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) xs.push_back(to_double(item));
    }
    return xs;
}

inline void validate_x_grid(const std::vector<double>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !std::isfinite(xs[i])) throw ConfigError("x_grid", "values must be strictly positive");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw ConfigError("x_grid", "values must be strictly increasing");
    }
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    ProcessModel model = DoublingMap{};
    ObservableSpec observable;
    std::size_t n = 1000;
    std::vector<double> x_grid;
    std::vector<Theorem> theorems{Theorem::thm1};
    std::size_t reps = 10000;
    std::uint64_t base_seed = 1;
    double alpha = kDefaultAlpha;
    std::string output;
    std::optional<std::size_t> variance_reps;  // Monte Carlo variance fallback; defaults to min(reps, 10000)
};

inline ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    detail::reject_unknown_keys(j, {"model", "observable", "n", "x_grid", "theorem", "reps", "base_seed", "alpha",
                                    "output", "variance_reps"},
                                "");
    ExperimentConfig c;
    c.model = parse_model(detail::require(j, "model", ""));
    if (j.contains("observable")) c.observable = parse_observable(j.at("observable"));
    c.n = detail::get_unsigned(j, "n", "");
    if (c.n == 0) throw ConfigError("n", "must be >= 1");
    const auto& grid = detail::require(j, "x_grid", "");
    if (!grid.is_array()) throw ConfigError("x_grid", "expected an array of numbers");
    for (const auto& x : grid) {
        if (!x.is_number()) throw ConfigError("x_grid", "expected an array of numbers");
        c.x_grid.push_back(x.get<double>());
    }
    validate_x_grid(c.x_grid);
    const auto& th = detail::require(j, "theorem", "");
    c.theorems.clear();
    if (th.is_string()) {
        c.theorems.push_back(parse_theorem(th.get<std::string>()));
    } else if (th.is_array() && !th.empty()) {
        for (const auto& t : th) {
            if (!t.is_string()) throw ConfigError("theorem", "expected a string or an array of strings");
            c.theorems.push_back(parse_theorem(t.get<std::string>()));
        }
    } else {
        throw ConfigError("theorem", "expected a string or a non-empty array of strings");
    }
    c.reps = detail::get_unsigned(j, "reps", "");
    if (c.reps == 0) throw ConfigError("reps", "must be >= 1");
    c.base_seed = detail::get_unsigned(j, "base_seed", "");
    if (j.contains("alpha")) {
        c.alpha = detail::get_number(j, "alpha", "");
        if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0,1)");
    }
    if (j.contains("output")) {
        if (!j.at("output").is_string()) throw ConfigError("output", "expected a string");
        c.output = j.at("output").get<std::string>();
    }
    if (j.contains("variance_reps")) {
        c.variance_reps = detail::get_unsigned(j, "variance_reps", "");
        if (*c.variance_reps < 2) throw ConfigError("variance_reps", "must be >= 2");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

enum class Verdict { pass, fail, skipped };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::skipped: return "skipped(NoValidBlockSize)";
    }
    return "?";
}

struct ReportRow {
    Theorem theorem = Theorem::thm1;
    double x = 0.0;
    std::optional<std::size_t> k_selected;
    std::optional<double> variance_used;
    std::optional<double> threshold;
    double bound_value = 1.0;  // exp(-x)
    std::optional<double> p_hat;
    std::optional<double> ci_high;
    Verdict verdict = Verdict::skipped;
    std::string variance_source;
};

struct VerificationResult {
    std::vector<ReportRow> rows;
    VarianceSource variance_source = VarianceSource::analytic;
    double truncation_error = 0.0;
};

// phi_j for the Hoeffding display, j = 1..n-1, from an L-infinity profile:
// the future X_{j+1..n} splits into dyadic lag blocks [2^b, 2^(b+1)), each
// contributing at most 2^b delta'_{2^b} to the coupled distance sum.
inline std::vector<double> hoeffding_phi_from_profile(const DependenceProfile& p, std::size_t n) {
    if (n > p.n()) throw std::out_of_range("profile shorter than n");
    std::vector<double> phi(n > 0 ? n - 1 : 0);
    for (std::size_t j = 1; j < n; ++j) {
        const std::size_t future = n - j;
        double sum = 0.0;
        for (std::size_t r = 1; r <= future; r *= 2) sum += static_cast<double>(r) * p(r);
        phi[j - 1] = std::min(1.0, sum / static_cast<double>(future));
    }
    return phi;
}

// Thresholds for every (theorem, x) pair without simulating S(f). Rows with
// no admissible block size keep an empty threshold.
inline VerificationResult evaluate_bounds(const ExperimentConfig& c, const ObservableF& f, std::size_t threads = 1) {
    validate_x_grid(c.x_grid);
    VerificationResult result;
    result.truncation_error = truncation_error(c.model);
    if (c.x_grid.empty()) return result;

    const auto profile = dependence_profile_for(c.model, c.n);
    auto variance = analytic_variance_profile(c.model, f, c.n);
    if (!variance) {
        const std::size_t vreps = c.variance_reps.value_or(std::max<std::size_t>(2, std::min<std::size_t>(c.reps, 10000)));
        variance = estimated_variance_profile(c.model, f, c.n, vreps, derive_seed(c.base_seed, 0), threads);
    }
    result.variance_source = variance->source();
    const std::string source = to_string(variance->source());

    for (const Theorem th : c.theorems) {
        for (const double x : c.x_grid) {
            ReportRow row;
            row.theorem = th;
            row.x = x;
            row.bound_value = std::exp(-x);
            row.variance_source = source;
            switch (th) {
                case Theorem::iid_eq1:
                    row.k_selected = 1;
                    row.variance_used = variance->sigma_sq(1);
                    row.threshold = iid_bernstein_threshold(c.n, *row.variance_used, x);
                    break;
                case Theorem::thm1: {
                    const auto sel = select_k_star(profile, *variance);
                    if (sel.valid()) {
                        row.k_selected = sel.k;
                        row.variance_used = sel.variance_at_k;
                        row.threshold = thm1_threshold(c.n, sel, x);
                    }
                    break;
                }
                case Theorem::thm2: {
                    const auto sel = with_variance(select_k_star_prime(profile, c.n, x), *variance);
                    if (sel.valid()) {
                        row.k_selected = sel.k;
                        row.variance_used = sel.variance_at_k;
                        row.threshold = thm2_threshold(c.n, sel, x);
                    }
                    break;
                }
                case Theorem::hoeffding: {
                    const auto phi = hoeffding_phi_from_profile(profile, c.n);
                    row.threshold = hoeffding_threshold(c.n, phi, x);
                    break;
                }
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

inline VerificationResult run_verification(const ExperimentConfig& c, std::size_t threads = 1) {
    const auto f = make_observable(c.model, c.observable, derive_seed(c.base_seed, 2));
    auto result = evaluate_bounds(c, f, threads);

    std::vector<double> thresholds;
    for (const auto& row : result.rows)
        if (row.threshold) thresholds.push_back(*row.threshold);
    if (thresholds.empty()) return result;
    const auto sums = sample_partial_sums(c.model, f, c.n, c.reps, derive_seed(c.base_seed, 1), threads);
    for (auto& row : result.rows) {
        if (!row.threshold) continue;
        const auto est = tail_from_sums(sums, *row.threshold, c.alpha);
        row.p_hat = est.p_hat;
        row.ci_high = est.ci_high;
        row.verdict = est.ci_high <= row.bound_value ? Verdict::pass : Verdict::fail;
    }
    return result;
}

inline bool any_failed(const std::vector<ReportRow>& rows) {
    return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.verdict == Verdict::fail; });
}

inline const std::vector<std::string>& report_header() {
    static const std::vector<std::string> h{"theorem", "x",    "k_selected", "variance_used", "threshold",
                                            "bound_value", "p_hat", "ci_high", "verdict", "variance_source"};
    return h;
}

inline void write_report(std::ostream& os, const std::vector<ReportRow>& rows) {
    write_csv_row(os, report_header());
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows) {
        write_csv_row(os, {to_string(r.theorem), format_double(r.x), r.k_selected ? std::to_string(*r.k_selected) : "",
                           opt(r.variance_used), opt(r.threshold), format_double(r.bound_value), opt(r.p_hat),
                           opt(r.ci_high), to_string(r.verdict), r.variance_source});
    }
}

inline void emit_report(const std::vector<ReportRow>& rows, const std::string& path) {
    auto os = open_output(path);
    write_report(os, rows);
    os.flush();
    check_stream(os, path);
}

// ---------------------------------------------------------------------------
// Block-size asymptotics
// ---------------------------------------------------------------------------

// Decay families, given through r delta_r:
//   geometric:  r delta_r = C rate^r                 (0 < rate < 1), reference -ln v
//   polynomial: delta_r = C r^-rate, r delta_r = C r^(1-rate) (rate > 1), reference v^(1/(1-rate))
struct DeltaFamily {
    enum class Kind { geometric, polynomial };
    Kind kind = Kind::geometric;
    double C = 1.0;
    double rate = 0.5;

    double r_delta(double r) const {
        return kind == Kind::geometric ? C * std::pow(rate, r) : C * std::pow(r, 1.0 - rate);
    }
    double reference(double v) const {
        return kind == Kind::geometric ? -std::log(v) : std::pow(v, 1.0 / (1.0 - rate));
    }
    const char* convention() const {
        return kind == Kind::geometric ? "r*delta_r=C*rate^r" : "delta_r=C*r^-rate (decay read for rate>1)";
    }
};

struct AsymptoticsRow {
    double v = 0.0;
    std::uint64_t k_star = 0;
    double reference = 0.0;
    double ratio = 0.0;
};

// min{k >= 1 : k delta_k <= v}; k delta_k is non-increasing for both families.
inline std::uint64_t family_k_star(const DeltaFamily& fam, double v) {
    if (fam.r_delta(1.0) <= v) return 1;
    std::uint64_t hi = 2;
    constexpr std::uint64_t kCap = std::uint64_t{1} << 62;
    while (fam.r_delta(static_cast<double>(hi)) > v) {
        if (hi >= kCap) throw std::overflow_error("k* exceeds 2^62");
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // lo fails, hi passes
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (fam.r_delta(static_cast<double>(mid)) <= v) hi = mid;
        else lo = mid;
    }
    return hi;
}

inline std::vector<AsymptoticsRow> run_blocksize_asymptotics(const DeltaFamily& fam, const std::vector<double>& targets) {
    if (!(fam.C > 0.0)) throw std::domain_error("family constant C must be positive");
    if (fam.kind == DeltaFamily::Kind::geometric && !(fam.rate > 0.0 && fam.rate < 1.0))
        throw std::domain_error("geometric rate must lie in (0,1)");
    if (fam.kind == DeltaFamily::Kind::polynomial && !(fam.rate > 1.0))
        throw std::domain_error("polynomial exponent must exceed 1");
    std::vector<AsymptoticsRow> rows;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double v = targets[i];
        if (!(v > 0.0)) throw std::domain_error("target variances must be positive");
        if (i > 0 && !(v < targets[i - 1])) throw std::domain_error("target variances must be decreasing");
        AsymptoticsRow row;
        row.v = v;
        row.k_star = family_k_star(fam, v);
        row.reference = fam.reference(v);
        row.ratio = static_cast<double>(row.k_star) / row.reference;
        rows.push_back(row);
    }
    return rows;
}

// max ratio / min ratio - 1 over the rows
inline double ratio_spread(const std::vector<AsymptoticsRow>& rows) {
    if (rows.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    return hi / lo - 1.0;
}

inline void write_asymptotics(std::ostream& os, const DeltaFamily& fam, const std::vector<AsymptoticsRow>& rows) {
    write_csv_row(os, {"family", "convention", "v", "k_star", "reference", "ratio"});
    const std::string name = fam.kind == DeltaFamily::Kind::geometric ? "geometric" : "polynomial";
    for (const auto& r : rows)
        write_csv_row(os, {name, fam.convention(), format_double(r.v), std::to_string(r.k_star),
                           format_double(r.reference), format_double(r.ratio)});
}

}  // namespace wdb
