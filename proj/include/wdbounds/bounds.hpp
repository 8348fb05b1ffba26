#pragma once

// Closed-form deviation bounds for partial sums S(f) = f(X_1) + ... + f(X_n)
// of a stationary sequence, f 1-Lipschitz with |f| <= 1/2.
//
// Thresholds t(x) are such that P(S(f) >= t(x)) <= exp(-x). Block selectors
// return the block length that balances dependence decay against variance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wdb {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class ProfileKind { phi_type, linf_type };

inline const char* to_string(ProfileKind k) {
    return k == ProfileKind::phi_type ? "phi_type" : "linf_type";
}

enum class VarianceSource { analytic, estimated };

inline const char* to_string(VarianceSource s) {
    return s == VarianceSource::analytic ? "analytic" : "estimated";
}

// Raised by profile validation; `index` is the 1-based lag of the first
// offending entry.
class ProfileError : public std::invalid_argument {
public:
    ProfileError(const std::string& what, std::size_t index)
        : std::invalid_argument(what + " (r=" + std::to_string(index) + ")"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class NoValidBlockSizeError : public std::domain_error {
public:
    NoValidBlockSizeError() : std::domain_error("no valid block size: the selector set is empty") {}
};

// delta_r for r = 1..n, non-increasing, in [0,1]. Construct through
// validate_profile() (coefficients.hpp) or the constructor, which checks.
class DependenceProfile {
public:
    DependenceProfile(std::vector<double> delta, ProfileKind kind);

    std::size_t n() const noexcept { return delta_.size(); }
    ProfileKind kind() const noexcept { return kind_; }
    // 1-based
    double operator()(std::size_t r) const { return delta_.at(r - 1); }
    std::span<const double> values() const noexcept { return delta_; }

private:
    std::vector<double> delta_;
    ProfileKind kind_;
};

// sigma_k^2 = Var(f(X_1)+...+f(X_k)) / k for k = 1..n and its suffix maximum.
class VarianceProfile {
public:
    VarianceProfile(std::vector<double> sigma_sq, VarianceSource source);

    std::size_t n() const noexcept { return sigma_sq_.size(); }
    VarianceSource source() const noexcept { return source_; }
    double sigma_sq(std::size_t k) const { return sigma_sq_.at(k - 1); }
    double envelope(std::size_t k) const { return envelope_.at(k - 1); }
    std::span<const double> sigma_sq_values() const noexcept { return sigma_sq_; }
    std::span<const double> envelope_values() const noexcept { return envelope_; }

private:
    friend VarianceProfile variance_envelope(VarianceProfile profile);
    static std::vector<double> suffix_max(const std::vector<double>& s) {
        std::vector<double> env(s.size());
        double running = 0.0;
        for (std::size_t i = s.size(); i-- > 0;) {
            running = std::max(running, s[i]);
            env[i] = running;
        }
        return env;
    }
    std::vector<double> sigma_sq_;
    std::vector<double> envelope_;
    VarianceSource source_;
};

struct BlockSelection {
    std::optional<std::size_t> k;  // nullopt: min over the empty set (+infinity)
    double variance_at_k = 0.0;

    bool valid() const noexcept { return k.has_value(); }
    std::size_t require() const {
        if (!k) throw NoValidBlockSizeError();
        return *k;
    }
};

namespace detail {

inline void require_nonnegative(double v, const char* what) {
    if (!(v >= 0.0)) throw std::domain_error(std::string(what) + " must be nonnegative");
}

inline double clamp_nonneg(double v) noexcept { return v < 0.0 ? 0.0 : v; }

// exp(y) - y - 1 without cancellation near 0
inline double exp_minus_linear(double y) {
    if (std::fabs(y) < 0.1) {
        double term = y * y / 2.0;
        double sum = 0.0;
        for (int m = 3; m < 24; ++m) {
            sum += term;
            term *= y / m;
        }
        return sum;
    }
    return std::expm1(y) - y;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rate functions
// ---------------------------------------------------------------------------

// h(x) = (1+x) ln(1+x) - x.
inline double bennett_h(double x) {
    detail::require_nonnegative(x, "bennett_h argument");
    if (x < 0.1) {
        // sum_{m>=2} (-1)^m x^m / (m(m-1)); the closed form cancels badly near 0
        double term = x * x;
        double sum = 0.0;
        for (int m = 2; m < 26; ++m) {
            sum += ((m % 2 == 0) ? term : -term) / (m * (m - 1.0));
            term *= x;
        }
        return sum;
    }
    if (std::isinf(x)) return x;
    return (1.0 + x) * std::log1p(x) - x;
}

// h1(x) = 1 + x - sqrt(1 + 2x), evaluated as x^2 / (1 + x + sqrt(1 + 2x)).
inline double bernstein_h1(double x) {
    detail::require_nonnegative(x, "bernstein_h1 argument");
    if (std::isinf(x)) return x;
    return x * x / (1.0 + x + std::sqrt(1.0 + 2.0 * x));
}

inline double h1_inverse(double x) {
    detail::require_nonnegative(x, "h1_inverse argument");
    return std::sqrt(2.0 * x) + x;
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

inline DependenceProfile::DependenceProfile(std::vector<double> delta, ProfileKind kind)
    : delta_(std::move(delta)), kind_(kind) {
    if (delta_.empty()) throw std::invalid_argument("dependence profile must have n >= 1");
    for (std::size_t i = 0; i < delta_.size(); ++i) {
        if (!(delta_[i] >= 0.0 && delta_[i] <= 1.0))
            throw ProfileError("dependence coefficient outside [0,1]", i + 1);
        if (i > 0 && delta_[i] > delta_[i - 1] + 1e-12)
            throw ProfileError("dependence profile is not non-increasing", i + 1);
    }
}

inline VarianceProfile::VarianceProfile(std::vector<double> sigma_sq, VarianceSource source)
    : sigma_sq_(std::move(sigma_sq)), source_(source) {
    if (sigma_sq_.empty()) throw std::invalid_argument("variance profile must have n >= 1");
    for (std::size_t i = 0; i < sigma_sq_.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        // |f| <= 1/2 gives Var(block sum) <= k^2/4
        if (!(sigma_sq_[i] >= 0.0) || sigma_sq_[i] > k / 4.0 * (1.0 + 1e-12))
            throw std::invalid_argument("sigma_k^2 outside [0, k/4] at k=" + std::to_string(i + 1));
    }
    envelope_ = suffix_max(sigma_sq_);
}

// envelope[k] = max_{k <= j <= n} sigma_sq[j], one backward pass. The
// constructor calls the same routine.
inline VarianceProfile variance_envelope(VarianceProfile profile) {
    profile.envelope_ = VarianceProfile::suffix_max(profile.sigma_sq_);
    return profile;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

// Classical Bernstein for n independent terms.
inline double iid_bernstein_threshold(std::size_t n, double sigma1_sq, double x) {
    if (n == 0) throw std::domain_error("n must be positive");
    detail::require_nonnegative(sigma1_sq, "sigma1_sq");
    detail::require_nonnegative(x, "x");
    return std::sqrt(2.0 * static_cast<double>(n) * sigma1_sq * x) + x / 6.0;
}

// Hoeffding-type threshold. phi[j-1] is the coefficient between the past up
// to j and the future block (X_{j+1},...,X_n), j = 1..n-1; the j = n summand
// has no future and contributes 1.
inline double hoeffding_threshold(std::size_t n, std::span<const double> phi, double x) {
    if (n == 0) throw std::domain_error("n must be positive");
    detail::require_nonnegative(x, "x");
    if (phi.size() + 1 < n) throw std::invalid_argument("phi must have length >= n-1");
    double sum = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        double factor = 1.0;
        if (j < n) {
            const double p = phi[j - 1];
            if (!(p >= 0.0 && p <= 1.0))
                throw ProfileError("hoeffding coefficient outside [0,1]", j);
            factor += 2.0 * static_cast<double>(n - j) * p;
        }
        sum += factor * factor;
    }
    return std::sqrt(0.5 * sum * x);
}

// ---------------------------------------------------------------------------
// Block-size selection
// ---------------------------------------------------------------------------

// k* = min{1 <= k <= n : k delta_k <= envelope_k}.
inline BlockSelection select_k_star(const DependenceProfile& delta, const VarianceProfile& variance) {
    if (delta.n() != variance.n())
        throw std::invalid_argument("dependence and variance profiles have different lengths");
    for (std::size_t k = 1; k <= delta.n(); ++k) {
        if (static_cast<double>(k) * delta(k) <= variance.envelope(k))
            return {k, variance.envelope(k)};
    }
    return {};
}

// k*' = min{1 <= k <= n : n delta'_k <= k x}. variance_at_k is left at 0;
// attach sigma_{k*'}^2 with with_variance().
inline BlockSelection select_k_star_prime(const DependenceProfile& delta_prime, std::size_t n, double x) {
    if (delta_prime.kind() != ProfileKind::linf_type)
        throw std::invalid_argument("select_k_star_prime needs an L-infinity coupling profile");
    if (!(x > 0.0)) throw std::domain_error("select_k_star_prime requires x > 0");
    if (n == 0 || n > delta_prime.n()) throw std::out_of_range("n must lie in [1, profile length]");
    const double nd = static_cast<double>(n);
    for (std::size_t k = 1; k <= n; ++k) {
        if (nd * delta_prime(k) <= static_cast<double>(k) * x) return {k, 0.0};
    }
    return {};
}

inline BlockSelection with_variance(BlockSelection sel, const VarianceProfile& variance) {
    if (sel.k) sel.variance_at_k = variance.sigma_sq(*sel.k);
    return sel;
}

// 5.8 sqrt(n sigma_bar^2_{k*} x) + 1.5 k* x
inline double thm1_threshold(std::size_t n, double envelope_at_k_star, std::size_t k_star, double x) {
    if (n == 0 || k_star == 0) throw std::domain_error("n and k* must be positive");
    detail::require_nonnegative(envelope_at_k_star, "envelope at k*");
    detail::require_nonnegative(x, "x");
    const double v = 5.8 * std::sqrt(static_cast<double>(n) * envelope_at_k_star * x) +
                     1.5 * static_cast<double>(k_star) * x;
    return detail::clamp_nonneg(v);
}

inline double thm1_threshold(std::size_t n, const BlockSelection& sel, double x) {
    return thm1_threshold(n, sel.variance_at_k, sel.require(), x);
}

// Bennett-type tail for the L-infinity coupling case:
//   exp(-(2 n s / k^2) h(k (x - n d) / (2 n s)))   for x >= n d.
// s = 0 is defined by continuity (0 beyond n d, 1 at equality).
inline double thm2_bennett_tail(std::size_t n, std::size_t k, double sigma_k_sq, double delta_prime_k,
                                double x) {
    if (n == 0 || k == 0) throw std::domain_error("n and k must be positive");
    detail::require_nonnegative(sigma_k_sq, "sigma_k^2");
    detail::require_nonnegative(delta_prime_k, "delta'_k");
    const double nd = static_cast<double>(n);
    const double shift = nd * delta_prime_k;
    if (x < shift) throw std::domain_error("thm2_bennett_tail requires x >= n delta'_k");
    const double excess = x - shift;
    if (sigma_k_sq == 0.0) return excess > 0.0 ? 0.0 : 1.0;
    const double kd = static_cast<double>(k);
    const double scale = 2.0 * nd * sigma_k_sq;
    const double exponent = scale / (kd * kd) * bennett_h(kd * excess / scale);
    return std::clamp(std::exp(-exponent), 0.0, 1.0);
}

// 2 sqrt(n sigma^2_{k*'} x) + 1.34 k*' x; k*' must come from
// select_k_star_prime with the same x.
inline double thm2_threshold(std::size_t n, double sigma_sq_at_kp, std::size_t k_star_prime, double x) {
    if (n == 0 || k_star_prime == 0) throw std::domain_error("n and k*' must be positive");
    detail::require_nonnegative(sigma_sq_at_kp, "sigma^2 at k*'");
    detail::require_nonnegative(x, "x");
    const double v = 2.0 * std::sqrt(static_cast<double>(n) * sigma_sq_at_kp * x) +
                     1.34 * static_cast<double>(k_star_prime) * x;
    return detail::clamp_nonneg(v);
}

inline double thm2_threshold(std::size_t n, const BlockSelection& sel, double x) {
    return thm2_threshold(n, sel.variance_at_k, sel.require(), x);
}

// ---------------------------------------------------------------------------
// Variance estimate from the dependence profile
// ---------------------------------------------------------------------------

// sigma_k^2 <= sigma_1^2 + 2 E|f(X_1)| sum_{r<k} delta_r
inline double varest_bound(double sigma1_sq, double mean_abs_f, const DependenceProfile& delta, std::size_t k) {
    detail::require_nonnegative(sigma1_sq, "sigma1_sq");
    if (!(mean_abs_f >= 0.0 && mean_abs_f <= 0.5)) throw std::domain_error("E|f(X_1)| must lie in [0, 1/2]");
    if (k == 0 || k > delta.n()) throw std::out_of_range("k must lie in [1, n]");
    double sum = 0.0;
    for (std::size_t r = 1; r < k; ++r) sum += delta(r);
    return sigma1_sq + 2.0 * mean_abs_f * sum;
}

// ---------------------------------------------------------------------------
// Log-MGF diagnostics (intermediate estimates of ln E exp(t S(f)))
// ---------------------------------------------------------------------------

// Block length paired with t in the phi-type estimate: floor(1/t) capped at n.
inline std::size_t mgf_block_length(double t, std::size_t n) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("t must lie in [0,1]");
    if (t == 0.0) return n;
    const double inv = std::floor(1.0 / t);
    return inv >= static_cast<double>(n) ? n : static_cast<std::size_t>(inv);
}

// 4 n t^2 (2(e-2) sigma_k^2 + e k delta_k), with k = mgf_block_length(t, n).
inline double log_mgf_bound_thm1(double t, std::size_t n, std::size_t k, double sigma_k_sq, double delta_k) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("t must lie in [0,1]");
    if (k != mgf_block_length(t, n))
        throw std::invalid_argument("k must equal min(floor(1/t), n)");
    detail::require_nonnegative(sigma_k_sq, "sigma_k^2");
    detail::require_nonnegative(delta_k, "delta_k");
    const double e = std::exp(1.0);
    const double nd = static_cast<double>(n);
    return 4.0 * nd * t * t * (2.0 * (e - 2.0) * sigma_k_sq + e * static_cast<double>(k) * delta_k);
}

// (2 n sigma_k^2 / k^2)(exp(k t) - k t - 1) + n delta'_k t
inline double log_mgf_bound_thm2(double t, std::size_t n, std::size_t k, double sigma_k_sq, double delta_prime_k) {
    detail::require_nonnegative(t, "t");
    if (n == 0 || k == 0) throw std::domain_error("n and k must be positive");
    detail::require_nonnegative(sigma_k_sq, "sigma_k^2");
    detail::require_nonnegative(delta_prime_k, "delta'_k");
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    return 2.0 * nd * sigma_k_sq / (kd * kd) * detail::exp_minus_linear(kd * t) + nd * delta_prime_k * t;
}

}  // namespace wdb
