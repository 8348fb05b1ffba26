#pragma once

// Monte Carlo estimates of block variances sigma_k^2, tail probabilities of
// S(f), coupling distances and E|f(X_1)|.
//
// Replication i always uses derive_seed(base, i), and reductions run in a
// fixed order over fixed-size chunks, so every estimate is bit-identical for
// any worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wdbounds/bounds.hpp"
#include "wdbounds/clopper_pearson.hpp"
#include "wdbounds/parallel.hpp"
#include "wdbounds/processes.hpp"
#include "wdbounds/rng.hpp"

namespace wdb {

inline constexpr double kDefaultAlpha = 0.01;

// ---------------------------------------------------------------------------
// Running moments up to order four with pairwise merging.
// ---------------------------------------------------------------------------

struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;

    void add(double x) {
        Moments one;
        one.n = 1.0;
        one.mean = x;
        merge(one);
    }

    void merge(const Moments& b) {
        if (b.n == 0.0) return;
        if (n == 0.0) {
            *this = b;
            return;
        }
        const double na = n, nb = b.n, nn = na + nb;
        const double d = b.mean - mean;
        const double d2 = d * d, d3 = d2 * d, d4 = d2 * d2;
        const double new_m4 = m4 + b.m4 + d4 * na * nb * (na * na - na * nb + nb * nb) / (nn * nn * nn) +
                              6.0 * d2 * (na * na * b.m2 + nb * nb * m2) / (nn * nn) +
                              4.0 * d * (na * b.m3 - nb * m3) / nn;
        const double new_m3 = m3 + b.m3 + d3 * na * nb * (na - nb) / (nn * nn) + 3.0 * d * (na * b.m2 - nb * m2) / nn;
        const double new_m2 = m2 + b.m2 + d2 * na * nb / nn;
        mean += d * nb / nn;
        m2 = new_m2;
        m3 = new_m3;
        m4 = new_m4;
        n = nn;
    }

    double sample_variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }

    // standard error of the sample variance from the fourth central moment
    double variance_std_error() const {
        if (n < 2.0) return 0.0;
        const double mu4 = m4 / n;
        const double s2 = sample_variance();
        const double v = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
        return std::sqrt(std::max(v, 0.0));
    }

    double mean_std_error() const { return n > 1.0 ? std::sqrt(sample_variance() / n) : 0.0; }
};

inline constexpr std::size_t kChunk = 1024;

// ---------------------------------------------------------------------------
// Analytic variance profiles
// ---------------------------------------------------------------------------

// Closed-form sigma_k^2 for the (model, observable) pairs that have one:
// iid uniform with the centred identity (1/12), and the doubling map with the
// centred identity, where Cov(X_0, X_r) = 2^-r / 12 gives
//   sigma_k^2 = (1/12)(1 + (2/k) sum_{r<k} (k-r) 2^-r) = (1/12)(1 + (2/k)(k - 2 + 2^(1-k))).
inline std::optional<double> analytic_sigma_sq(const ProcessModel& model, const ObservableF& f, std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (f.kind != ObservableF::Kind::centered_identity || f.mu != 0.5) return std::nullopt;
    if (std::holds_alternative<IidUniform>(model)) return 1.0 / 12.0;
    if (std::holds_alternative<DoublingMap>(model)) {
        const double kd = static_cast<double>(k);
        return (1.0 + 2.0 / kd * (kd - 2.0 + std::ldexp(1.0, 1 - static_cast<int>(std::min<std::size_t>(k, 2000))))) / 12.0;
    }
    return std::nullopt;
}

inline std::optional<VarianceProfile> analytic_variance_profile(const ProcessModel& model, const ObservableF& f,
                                                                std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    std::vector<double> s(n);
    for (std::size_t k = 1; k <= n; ++k) {
        const auto v = analytic_sigma_sq(model, f, k);
        if (!v) return std::nullopt;
        s[k - 1] = *v;
    }
    return VarianceProfile(std::move(s), VarianceSource::analytic);
}

// ---------------------------------------------------------------------------
// sigma_k^2
// ---------------------------------------------------------------------------

struct SigmaEstimate {
    std::size_t k = 0;
    double sigma_sq_hat = 0.0;
    double std_error = 0.0;
    std::size_t reps = 0;
};

// Replication i simulates one stationary trajectory of length max(k_list) and
// records the block sums B_k = f(X_1) + ... + f(X_k) for every requested k.
// A length-k prefix of a stationary trajectory is itself a stationary
// length-k trajectory, so each k sees `reps` independent block sums.
inline std::vector<SigmaEstimate> estimate_sigma_profile(const ProcessModel& model, const ObservableF& f,
                                                         std::vector<std::size_t> k_list, std::size_t reps,
                                                         std::uint64_t seed, std::size_t threads = 1) {
    if (reps < 2) throw std::invalid_argument("estimate_sigma_profile needs reps >= 2");
    if (k_list.empty()) return {};
    for (auto k : k_list)
        if (k == 0) throw std::invalid_argument("block lengths must be positive");
    std::vector<std::size_t> sorted = k_list;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const std::size_t kmax = sorted.back();

    const std::size_t chunks = (reps + kChunk - 1) / kChunk;
    auto per_chunk = parallel_map<std::vector<Moments>>(chunks, threads, [&](std::size_t c) {
        std::vector<Moments> acc(sorted.size());
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(reps, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
            Xoshiro256pp gen(derive_seed(seed, i));
            Simulator sim(model);
            sim.init(gen);
            double b = 0.0;
            std::size_t next = 0;
            for (std::size_t t = 1; t <= kmax; ++t) {
                b += f(sim.step(gen()));
                if (t == sorted[next]) acc[next++].add(b);
            }
        }
        return acc;
    });
    std::vector<Moments> total(sorted.size());
    for (const auto& chunk : per_chunk)
        for (std::size_t i = 0; i < sorted.size(); ++i) total[i].merge(chunk[i]);

    std::vector<SigmaEstimate> out;
    out.reserve(k_list.size());
    for (auto k : k_list) {
        const auto idx = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), k) - sorted.begin());
        const double kd = static_cast<double>(k);
        out.push_back({k, total[idx].sample_variance() / kd, total[idx].variance_std_error() / kd, reps});
    }
    return out;
}

// Full profile k = 1..n from Monte Carlo, clamped into [0, k/4].
inline VarianceProfile estimated_variance_profile(const ProcessModel& model, const ObservableF& f, std::size_t n,
                                                  std::size_t reps, std::uint64_t seed, std::size_t threads = 1) {
    std::vector<std::size_t> ks(n);
    for (std::size_t k = 1; k <= n; ++k) ks[k - 1] = k;
    const auto est = estimate_sigma_profile(model, f, ks, reps, seed, threads);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = std::clamp(est[i].sigma_sq_hat, 0.0, static_cast<double>(i + 1) / 4.0);
    return VarianceProfile(std::move(s), VarianceSource::estimated);
}

// ---------------------------------------------------------------------------
// Tail probabilities
// ---------------------------------------------------------------------------

struct TailEstimate {
    double threshold = 0.0;
    double x = 0.0;  // target exponent, informational
    std::uint64_t hits = 0;
    std::uint64_t reps = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
};

// S(f) for `reps` independent stationary trajectories of length n.
inline std::vector<double> sample_partial_sums(const ProcessModel& model, const ObservableF& f, std::size_t n,
                                               std::size_t reps, std::uint64_t seed, std::size_t threads = 1) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (reps == 0) throw std::invalid_argument("reps must be positive");
    return parallel_map<double>(reps, threads, [&](std::size_t i) {
        Xoshiro256pp gen(derive_seed(seed, i));
        Simulator sim(model);
        sim.init(gen);
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += f(sim.step(gen()));
        return s;
    });
}

inline TailEstimate tail_from_sums(std::span<const double> sums, double threshold, double alpha = kDefaultAlpha) {
    TailEstimate est;
    est.threshold = threshold;
    est.reps = sums.size();
    est.hits = static_cast<std::uint64_t>(std::count_if(sums.begin(), sums.end(), [&](double s) { return s >= threshold; }));
    est.p_hat = static_cast<double>(est.hits) / static_cast<double>(est.reps);
    const auto ci = clopper_pearson(est.hits, est.reps, alpha);
    est.ci_low = std::min(ci.low, est.p_hat);
    est.ci_high = std::max(ci.high, est.p_hat);
    return est;
}

inline TailEstimate estimate_tail(const ProcessModel& model, const ObservableF& f, std::size_t n, double threshold,
                                  std::size_t reps, std::uint64_t seed, double alpha = kDefaultAlpha,
                                  std::size_t threads = 1) {
    const auto sums = sample_partial_sums(model, f, n, reps, seed, threads);
    return tail_from_sums(sums, threshold, alpha);
}

// Several thresholds against one shared sample of S(f).
inline std::vector<TailEstimate> estimate_tails(const ProcessModel& model, const ObservableF& f, std::size_t n,
                                                std::span<const double> thresholds, std::size_t reps,
                                                std::uint64_t seed, double alpha = kDefaultAlpha,
                                                std::size_t threads = 1) {
    const auto sums = sample_partial_sums(model, f, n, reps, seed, threads);
    std::vector<TailEstimate> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) out.push_back(tail_from_sums(sums, t, alpha));
    return out;
}

// ---------------------------------------------------------------------------
// Coupling distances
// ---------------------------------------------------------------------------

struct CouplingEstimate {
    std::size_t r = 0;
    std::vector<std::size_t> j_list;
    std::vector<double> max_per_j;   // max over reps of the distance sum, per split index
    double max_distance_sum = 0.0;   // max over reps and split indices
    double delta_hat = 0.0;          // max_distance_sum / r, empirical lower witness for delta'_r
    std::size_t reps = 0;
};

inline std::vector<CouplingEstimate> estimate_coupling_delta(const ProcessModel& model,
                                                             const std::vector<std::size_t>& r_list,
                                                             const std::vector<std::size_t>& j_list,
                                                             std::size_t reps, std::uint64_t seed,
                                                             std::size_t threads = 1,
                                                             std::optional<std::size_t> horizon = {}) {
    if (reps == 0) throw std::invalid_argument("reps must be positive");
    if (j_list.empty()) throw std::invalid_argument("need at least one split index");
    std::vector<CouplingEstimate> out;
    for (std::size_t ri = 0; ri < r_list.size(); ++ri) {
        CouplingEstimate est;
        est.r = r_list[ri];
        est.j_list = j_list;
        est.reps = reps;
        for (std::size_t ji = 0; ji < j_list.size(); ++ji) {
            const std::uint64_t cell_seed = derive_seed(derive_seed(seed, ri), ji);
            const std::size_t chunks = (reps + kChunk - 1) / kChunk;
            auto maxima = parallel_map<double>(chunks, threads, [&](std::size_t c) {
                double m = 0.0;
                const std::size_t end = std::min(reps, (c + 1) * kChunk);
                for (std::size_t i = c * kChunk; i < end; ++i) {
                    CouplingOptions opts;
                    opts.horizon = horizon;
                    const auto block = simulate_coupled_block(model, j_list[ji], est.r, derive_seed(cell_seed, i), opts);
                    m = std::max(m, block.distance_sum);
                }
                return m;
            });
            const double m = maxima.empty() ? 0.0 : *std::max_element(maxima.begin(), maxima.end());
            est.max_per_j.push_back(m);
            est.max_distance_sum = std::max(est.max_distance_sum, m);
        }
        est.delta_hat = est.max_distance_sum / static_cast<double>(est.r);
        out.push_back(std::move(est));
    }
    return out;
}

// ---------------------------------------------------------------------------
// E|f(X_1)|
// ---------------------------------------------------------------------------

struct MeanEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t reps = 0;
};

inline MeanEstimate estimate_mean_abs_f(const ProcessModel& model, const ObservableF& f, std::size_t reps,
                                        std::uint64_t seed, std::size_t threads = 1) {
    if (reps < 2) throw std::invalid_argument("estimate_mean_abs_f needs reps >= 2");
    const std::size_t chunks = (reps + kChunk - 1) / kChunk;
    auto per_chunk = parallel_map<Moments>(chunks, threads, [&](std::size_t c) {
        Moments m;
        const std::size_t end = std::min(reps, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            Xoshiro256pp gen(derive_seed(seed, i));
            Simulator sim(model);
            sim.init(gen);
            m.add(std::fabs(f(sim.step(gen()))));
        }
        return m;
    });
    Moments total;
    for (const auto& m : per_chunk) total.merge(m);
    return {total.mean, total.mean_std_error(), reps};
}

}  // namespace wdb
