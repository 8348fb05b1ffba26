#pragma once

// Dependence profiles (delta_r or delta'_r, r = 1..n) for the example process
// families: doubling map, expanding maps, contracting Markov kernels, chains
// with infinite memory and Bernoulli shifts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "wdbounds/bounds.hpp"

namespace wdb {

// Clips to [0,1] and checks non-increase (1e-12 slack). Throws ProfileError
// naming the first offending lag.
inline DependenceProfile validate_profile(std::span<const double> raw, ProfileKind kind) {
    if (raw.empty()) throw std::invalid_argument("dependence profile must have n >= 1");
    std::vector<double> clipped(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::isnan(raw[i])) throw ProfileError("dependence coefficient is NaN", i + 1);
        clipped[i] = std::clamp(raw[i], 0.0, 1.0);
        if (i > 0 && clipped[i] > clipped[i - 1] + 1e-12)
            throw ProfileError("dependence profile is not non-increasing", i + 1);
    }
    // absorb sub-tolerance round-off so the stored profile is exactly monotone
    for (std::size_t i = 1; i < clipped.size(); ++i) clipped[i] = std::min(clipped[i], clipped[i - 1]);
    return DependenceProfile(std::move(clipped), kind);
}

// ---------------------------------------------------------------------------
// Weight sequences a_1, a_2, ...: explicit head terms followed by a tail law
// with a closed-form (geometric) or rigorous upper-bound (power) tail sum.
// ---------------------------------------------------------------------------

class WeightSequence {
public:
    enum class Law { none, geometric, power };

    // a_i = scale * ratio^i, i >= 1
    static WeightSequence geometric(double scale, double ratio) {
        if (!(scale >= 0.0)) throw std::domain_error("geometric weight scale must be nonnegative");
        if (!(ratio >= 0.0 && ratio < 1.0)) throw std::domain_error("divergent weights: geometric ratio must lie in [0,1)");
        return WeightSequence({}, Law::geometric, scale, ratio);
    }

    // a_i = scale * i^(-exponent), i >= 1
    static WeightSequence power_law(double scale, double exponent) {
        if (!(scale >= 0.0)) throw std::domain_error("power-law weight scale must be nonnegative");
        if (!(exponent > 1.0)) throw std::domain_error("divergent weights: power-law exponent must exceed 1");
        return WeightSequence({}, Law::power, scale, exponent);
    }

    static WeightSequence finite(std::vector<double> terms) {
        for (double a : terms)
            if (!(a >= 0.0 && std::isfinite(a))) throw std::domain_error("weights must be finite and nonnegative");
        return WeightSequence(std::move(terms), Law::none, 0.0, 0.0);
    }

    Law law() const noexcept { return law_; }
    double scale() const noexcept { return scale_; }
    double rate() const noexcept { return rate_; }
    std::span<const double> head() const noexcept { return head_; }

    double term(std::size_t i) const {
        if (i == 0) throw std::out_of_range("weights are indexed from 1");
        if (i <= head_.size()) return head_[i - 1];
        switch (law_) {
            case Law::geometric: return scale_ * std::pow(rate_, static_cast<double>(i));
            case Law::power: return scale_ * std::pow(static_cast<double>(i), -rate_);
            case Law::none: return 0.0;
        }
        return 0.0;
    }

    // sum_{i >= p} a_i (an upper bound for power laws)
    double tail_sum(std::size_t p) const { return tail_sums(p).back(); }

    // total a = sum_{i >= 1} a_i
    double total() const { return tail_sum(1); }

    // Returns T with T[p-1] = sum_{i >= p} a_i for p = 1..last.
    std::vector<double> tail_sums(std::size_t last) const {
        if (last == 0) throw std::out_of_range("tail sums are indexed from 1");
        std::vector<double> tails(last);
        double acc = law_tail_beyond(last);  // sum_{i > last}
        for (std::size_t p = last; p >= 1; --p) {
            acc += term(p);
            tails[p - 1] = acc;
        }
        return tails;
    }

private:
    WeightSequence(std::vector<double> head, Law law, double scale, double rate)
        : head_(std::move(head)), law_(law), scale_(scale), rate_(rate) {}

    // sum_{i > m} a_i
    double law_tail_beyond(std::size_t m) const {
        double explicit_part = 0.0;
        for (std::size_t i = m + 1; i <= head_.size(); ++i) explicit_part += head_[i - 1];
        const std::size_t start = std::max(m, head_.size());  // law applies to i > start
        switch (law_) {
            case Law::none: return explicit_part;
            case Law::geometric:
                return explicit_part + scale_ * std::pow(rate_, static_cast<double>(start + 1)) / (1.0 - rate_);
            case Law::power: {
                // exact partial sum over the next kPartial terms, then
                // sum_{i > M} i^-s <= M^(1-s) / (s-1)
                constexpr std::size_t kPartial = 4096;
                double s = 0.0;
                const std::size_t stop = start + kPartial;
                for (std::size_t i = stop; i > start; --i) s += std::pow(static_cast<double>(i), -rate_);
                s += std::pow(static_cast<double>(stop), 1.0 - rate_) / (rate_ - 1.0);
                return explicit_part + scale_ * s;
            }
        }
        return explicit_part;
    }

    std::vector<double> head_;
    Law law_;
    double scale_;
    double rate_;
};

// Regularity data of a Bernoulli shift X_t = H(U_t), U_t = F(xi_t, xi_{t-1}, ...):
// phi[m-1] = phi-mixing coefficient of the innovations at gap m,
// v[k-1]   = a.s. effect of resampling innovations older than k,
// modulus_mean(eta) = E[w_H(U_0, eta)] (clipped at 1 by the caller).
struct ShiftRegularity {
    std::vector<double> phi;
    std::vector<double> v;
    std::function<double(double)> modulus_mean;
};

// E[w_H(U_0, eta)] estimated from draws of U_0 and a modulus w_H(u, eta).
inline std::function<double(double)> monte_carlo_modulus_mean(std::vector<double> u_samples,
                                                              std::function<double(double, double)> w_h) {
    if (u_samples.empty()) throw std::invalid_argument("need at least one sample of U_0");
    return [u = std::move(u_samples), w = std::move(w_h)](double eta) {
        double sum = 0.0;
        for (double x : u) sum += w(x, eta);
        return sum / static_cast<double>(u.size());
    };
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

namespace detail {

// delta with r * delta == q in floating point where a neighbour of q/r allows
// it, preferring values not below the exact quotient.
inline double per_lag(double q, std::size_t r) {
    const double rd = static_cast<double>(r);
    const double d = q / rd;
    const double candidates[] = {d, std::nextafter(d, 2.0), std::nextafter(d, -1.0)};
    for (double c : candidates)
        if (c * rd == q && std::fma(c, rd, -q) >= 0.0) return c;
    return d;
}

}  // namespace detail

// r delta_r = (4/9) 2^-r, an L-infinity profile.
inline DependenceProfile doubling_map_profile(std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    std::vector<double> d(n);
    for (std::size_t r = 1; r <= n; ++r)
        d[r - 1] = detail::per_lag(std::ldexp(4.0 / 9.0, -static_cast<int>(r)), r);
    return validate_profile(d, ProfileKind::linf_type);
}

// r delta_r = C rho^r, clipped at 1.
inline DependenceProfile expanding_map_profile(double C, double rho, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (!(C > 0.0)) throw std::domain_error("C must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
    std::vector<double> d(n);
    for (std::size_t r = 1; r <= n; ++r)
        d[r - 1] = std::min(1.0, C * std::pow(rho, static_cast<double>(r)) / static_cast<double>(r));
    return validate_profile(d, ProfileKind::phi_type);
}

// r delta'_r = kappa^r (1 + kappa + ... + kappa^r), clipped at 1.
inline DependenceProfile markov_contraction_profile(double kappa, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::domain_error("kappa must lie in (0,1)");
    std::vector<double> d(n);
    for (std::size_t r = 1; r <= n; ++r) {
        const double rd = static_cast<double>(r);
        const double geometric_sum = -std::expm1((rd + 1.0) * std::log(kappa)) / (1.0 - kappa);
        d[r - 1] = std::min(1.0, std::pow(kappa, rd) * geometric_sum / rd);
    }
    return validate_profile(d, ProfileKind::linf_type);
}

// Chains with infinite memory:
//   r delta'_r = sum_{j=r}^{2r-1} min_{1<=p<=j} ( a^(r/p) + sum_{i>=p} a_i ),  a = sum_i a_i < 1.
inline DependenceProfile infinite_memory_profile(const WeightSequence& weights, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    const auto tails = weights.tail_sums(2 * n);
    const double a = tails[0];
    if (!(a < 1.0)) throw std::domain_error("contraction violated: sum of weights must be < 1");
    std::vector<double> d(n);
    for (std::size_t r = 1; r <= n; ++r) {
        const double rd = static_cast<double>(r);
        double inner = std::numeric_limits<double>::infinity();
        // the inner minimum over p <= j only grows its range with j
        for (std::size_t p = 1; p < r; ++p)
            inner = std::min(inner, std::pow(a, rd / static_cast<double>(p)) + tails[p - 1]);
        double sum = 0.0;
        for (std::size_t j = r; j <= 2 * r - 1; ++j) {
            inner = std::min(inner, std::pow(a, rd / static_cast<double>(j)) + tails[j - 1]);
            sum += inner;
        }
        d[r - 1] = std::min(1.0, sum / rd);
    }
    return validate_profile(d, ProfileKind::linf_type);
}

// L-infinity Bernoulli shifts: r delta'_r = C sum_{i >= r} a_i.
inline DependenceProfile bernoulli_shift_linf_profile(double C, const WeightSequence& weights, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (!(C > 0.0)) throw std::domain_error("C must be positive");
    const auto tails = weights.tail_sums(n);
    if (!std::isfinite(tails[0])) throw std::domain_error("divergent weights");
    std::vector<double> d(n);
    for (std::size_t r = 1; r <= n; ++r) d[r - 1] = std::min(1.0, C * tails[r - 1] / static_cast<double>(r));
    return validate_profile(d, ProfileKind::linf_type);
}

// phi-type Bernoulli shifts:
//   delta_r = min_{1<=k<=r-1} { 2 phi_{r-k} + min(3 E[w_H(U_0, 2 v_k)], 1) },  delta_1 = 1.
inline DependenceProfile bernoulli_shift_phi_profile(const ShiftRegularity& reg, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (reg.phi.size() + 1 < n || reg.v.size() + 1 < n)
        throw std::invalid_argument("phi and v must cover lags 1..n-1");
    if (!reg.modulus_mean) throw std::invalid_argument("modulus_mean is required");
    for (std::size_t i = 1; i < reg.phi.size(); ++i)
        if (reg.phi[i] > reg.phi[i - 1]) throw ProfileError("phi is not non-increasing", i + 1);
    for (std::size_t i = 1; i < reg.v.size(); ++i)
        if (reg.v[i] > reg.v[i - 1]) throw ProfileError("v is not non-increasing", i + 1);
    for (std::size_t i = 0; i < reg.phi.size(); ++i)
        if (!(reg.phi[i] >= 0.0 && reg.phi[i] <= 1.0)) throw ProfileError("phi outside [0,1]", i + 1);

    std::vector<double> modulus(n > 1 ? n - 1 : 0);
    for (std::size_t k = 1; k < n; ++k) {
        const double m = reg.modulus_mean(2.0 * reg.v[k - 1]);
        if (!(m >= 0.0)) throw ProfileError("modulus mean must be nonnegative", k);
        modulus[k - 1] = std::min(3.0 * std::min(m, 1.0), 1.0);
    }
    std::vector<double> d(n, 1.0);
    for (std::size_t r = 2; r <= n; ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < r; ++k) best = std::min(best, 2.0 * reg.phi[r - k - 1] + modulus[k - 1]);
        d[r - 1] = std::min(best, 1.0);
    }
    return validate_profile(d, ProfileKind::phi_type);
}

}  // namespace wdb
