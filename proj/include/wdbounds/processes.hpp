#pragma once

// Seeded simulators for the example processes on [0,1] with d(x,y) = |x - y|,
// plus coupled pairs that share innovations after a split index.
//
// Each simulator consumes exactly one 64-bit word per time step; stationary
// initialisation may consume several. Feeding two simulators the same words
// after a split is how coupled blocks are built.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wdbounds/coefficients.hpp"
#include "wdbounds/rng.hpp"

namespace wdb {

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

struct IidUniform {};

// X_t = (X_{t-1} + xi_t) / 2, xi_t fair bits; Uniform[0,1] stationary law.
struct DoublingMap {};

// X_t = kappa X_{t-1} + (1 - kappa) U_t.
struct LipschitzKernelChain {
    double kappa = 0.5;
};

// X_t = (1 - theta) sum_{i<M} theta^i U_{t-i}.
struct BernoulliShiftGeometric {
    double theta = 0.5;
    std::size_t truncation = 0;
};

// X_t = sum_{j<=M} a_j X_{t-j} + (1 - a) U_t with a = sum_j a_j < 1.
struct InfiniteMemoryChain {
    WeightSequence weights = WeightSequence::geometric(0.5, 0.5);
    std::size_t truncation = 0;
};

using ProcessModel =
    std::variant<IidUniform, DoublingMap, LipschitzKernelChain, BernoulliShiftGeometric, InfiniteMemoryChain>;

inline constexpr double kTruncationTail = 0x1.0p-40;
inline constexpr std::size_t kMaxTruncation = 4096;

// Smallest M with sum_{i>M} weight <= 2^-40, capped at kMaxTruncation.
inline std::size_t default_truncation(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("theta must lie in (0,1)");
    // tail weight of the geometric filter beyond M terms is theta^M
    const double m = std::ceil(std::log(kTruncationTail) / std::log(theta));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, m)), 1, kMaxTruncation);
}

inline std::size_t default_truncation(const WeightSequence& w) {
    const auto tails = w.tail_sums(kMaxTruncation + 1);
    for (std::size_t m = 1; m <= kMaxTruncation; ++m)
        if (tails[m] <= kTruncationTail) return m;  // tails[m] = sum_{i > m}
    return kMaxTruncation;
}

inline BernoulliShiftGeometric make_bernoulli_shift(double theta, std::size_t truncation = 0) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("theta must lie in (0,1)");
    return {theta, truncation == 0 ? default_truncation(theta) : truncation};
}

inline InfiniteMemoryChain make_infinite_memory_chain(WeightSequence w, std::size_t truncation = 0) {
    if (!(w.total() < 1.0)) throw std::domain_error("contraction violated: sum of weights must be < 1");
    const std::size_t m = truncation == 0 ? default_truncation(w) : truncation;
    return {std::move(w), m};
}

inline LipschitzKernelChain make_kernel_chain(double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::domain_error("kappa must lie in (0,1)");
    return {kappa};
}

inline std::string model_name(const ProcessModel& m) {
    struct V {
        std::string operator()(const IidUniform&) const { return "iid_uniform"; }
        std::string operator()(const DoublingMap&) const { return "doubling_map"; }
        std::string operator()(const LipschitzKernelChain&) const { return "lipschitz_kernel_chain"; }
        std::string operator()(const BernoulliShiftGeometric&) const { return "bernoulli_shift_geometric"; }
        std::string operator()(const InfiniteMemoryChain&) const { return "infinite_memory_chain"; }
    };
    return std::visit(V{}, m);
}

// Weight left out by the truncation (0 for untruncated models).
inline double truncation_error(const ProcessModel& m) {
    if (auto* b = std::get_if<BernoulliShiftGeometric>(&m))
        return std::pow(b->theta, static_cast<double>(b->truncation));
    if (auto* c = std::get_if<InfiniteMemoryChain>(&m)) return c->weights.tail_sum(c->truncation + 1);
    return 0.0;
}

// Exact stationary mean of the simulated (truncated) process. The support is
// [0, 2 mean], so u - mean is bounded by 1/2.
inline double stationary_mean(const ProcessModel& m) {
    if (auto* b = std::get_if<BernoulliShiftGeometric>(&m))
        return 0.5 * (1.0 - std::pow(b->theta, static_cast<double>(b->truncation)));
    if (auto* c = std::get_if<InfiniteMemoryChain>(&m)) {
        const double a = c->weights.total();
        const double kept = a - c->weights.tail_sum(c->truncation + 1);
        return 0.5 * (1.0 - a) / (1.0 - kept);
    }
    return 0.5;
}

// L-infinity coupling profile used by the harness for each model.
inline DependenceProfile dependence_profile_for(const ProcessModel& m, std::size_t n) {
    struct V {
        std::size_t n;
        DependenceProfile operator()(const IidUniform&) const {
            return DependenceProfile(std::vector<double>(n, 0.0), ProfileKind::linf_type);
        }
        DependenceProfile operator()(const DoublingMap&) const { return doubling_map_profile(n); }
        DependenceProfile operator()(const LipschitzKernelChain& c) const {
            return markov_contraction_profile(c.kappa, n);
        }
        DependenceProfile operator()(const BernoulliShiftGeometric& b) const {
            // |X_t - X*_t| <= sum_{i >= t-j} (1-theta) theta^i = theta^(t-j); summed over a block
            // of r lags starting at lag r this is at most theta^r / (1 - theta).
            return bernoulli_shift_linf_profile(1.0, WeightSequence::geometric(1.0, b.theta), n);
        }
        DependenceProfile operator()(const InfiniteMemoryChain& c) const {
            return infinite_memory_profile(c.weights, n);
        }
    };
    return std::visit(V{n}, m);
}

// ---------------------------------------------------------------------------
// Simulators
// ---------------------------------------------------------------------------

namespace detail {

class IidState {
public:
    template <class G>
    double init(G& gen) { return x_ = to_unit(gen()); }
    double step(std::uint64_t raw) { return x_ = to_unit(raw); }

private:
    double x_ = 0.0;
};

class DoublingState {
public:
    // X_0 = sum_{j=0}^{63} xi_{-j} 2^-(j+1): the bits of one word, rounded to double
    template <class G>
    double init(G& gen) { return x_ = static_cast<double>(gen()) * 0x1.0p-64; }
    double step(std::uint64_t raw) { return x_ = 0.5 * (x_ + static_cast<double>(to_bit(raw))); }

private:
    double x_ = 0.0;
};

class KernelState {
public:
    explicit KernelState(double kappa) : kappa_(kappa) {}
    // burn-in from 1/2: bias <= kappa^B <= 2^-52
    template <class G>
    double init(G& gen) {
        x_ = 0.5;
        const auto burn = static_cast<std::size_t>(std::ceil(52.0 * std::numbers::ln2 / std::log(1.0 / kappa_)));
        for (std::size_t i = 0; i < burn; ++i) step(gen());
        return x_;
    }
    double step(std::uint64_t raw) { return x_ = kappa_ * x_ + (1.0 - kappa_) * to_unit(raw); }

private:
    double kappa_;
    double x_ = 0.5;
};

class ShiftState {
public:
    explicit ShiftState(const BernoulliShiftGeometric& m) : window_(m.truncation, 0.0), coef_(m.truncation) {
        for (std::size_t i = 0; i < coef_.size(); ++i)
            coef_[i] = (1.0 - m.theta) * std::pow(m.theta, static_cast<double>(i));
    }
    // fill the window U_0, U_{-1}, ..., U_{-(M-1)}
    template <class G>
    double init(G& gen) {
        for (std::size_t i = window_.size(); i-- > 0;) push(to_unit(gen()));
        return value();
    }
    double step(std::uint64_t raw) {
        push(to_unit(raw));
        return value();
    }

private:
    void push(double u) {
        head_ = (head_ + 1) % window_.size();
        window_[head_] = u;
    }
    double value() const {
        double s = 0.0;
        const std::size_t m = window_.size();
        for (std::size_t i = 0; i < m; ++i) s += coef_[i] * window_[(head_ + m - i) % m];
        return std::min(s, 1.0);
    }
    std::vector<double> window_;
    std::vector<double> coef_;
    std::size_t head_ = 0;
};

class InfiniteMemoryState {
public:
    explicit InfiniteMemoryState(const InfiniteMemoryChain& m)
        : history_(m.truncation, 0.0), a_(m.truncation), innovation_scale_(1.0 - m.weights.total()) {
        for (std::size_t j = 0; j < a_.size(); ++j) a_[j] = m.weights.term(j + 1);
        total_ = m.weights.total();
    }
    // burn-in from the zero history: the error shrinks by a factor total every
    // M steps, so M * ceil(52 ln2 / ln(1/total)) steps reach 2^-52
    template <class G>
    double init(G& gen) {
        std::fill(history_.begin(), history_.end(), 0.0);
        std::size_t windows = 1;
        if (total_ > 0.0) windows = static_cast<std::size_t>(std::ceil(52.0 * std::numbers::ln2 / std::log(1.0 / total_)));
        const std::size_t burn = std::max<std::size_t>(1, windows) * history_.size();
        double x = 0.0;
        for (std::size_t i = 0; i < burn; ++i) x = step(gen());
        return x;
    }
    double step(std::uint64_t raw) {
        const std::size_t m = history_.size();
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += a_[j] * history_[(head_ + m - j) % m];
        const double x = std::clamp(s + innovation_scale_ * to_unit(raw), 0.0, 1.0);
        head_ = (head_ + 1) % m;
        history_[head_] = x;
        return x;
    }

private:
    std::vector<double> history_;  // history_[head_] = X_{t-1}
    std::vector<double> a_;
    double innovation_scale_;
    double total_ = 0.0;
    std::size_t head_ = 0;
};

using AnyState = std::variant<IidState, DoublingState, KernelState, ShiftState, InfiniteMemoryState>;

inline AnyState make_state(const ProcessModel& m) {
    struct V {
        AnyState operator()(const IidUniform&) const { return IidState{}; }
        AnyState operator()(const DoublingMap&) const { return DoublingState{}; }
        AnyState operator()(const LipschitzKernelChain& c) const { return KernelState(c.kappa); }
        AnyState operator()(const BernoulliShiftGeometric& b) const {
            if (b.truncation == 0) throw std::invalid_argument("bernoulli shift truncation must be positive");
            return ShiftState(b);
        }
        AnyState operator()(const InfiniteMemoryChain& c) const {
            if (c.truncation == 0) throw std::invalid_argument("infinite-memory truncation must be positive");
            if (!(c.weights.total() < 1.0)) throw std::domain_error("contraction violated: sum of weights must be < 1");
            return InfiniteMemoryState(c);
        }
    };
    return std::visit(V{}, m);
}

}  // namespace detail

// A running process: init() draws X_0 from the stationary law, step() advances
// by one innovation word.
class Simulator {
public:
    explicit Simulator(const ProcessModel& model) : state_(detail::make_state(model)) {}

    template <class G>
    double init(G& gen) {
        return std::visit([&](auto& s) { return s.init(gen); }, state_);
    }
    double step(std::uint64_t raw) {
        return std::visit([raw](auto& s) { return s.step(raw); }, state_);
    }

private:
    detail::AnyState state_;
};

// X_0 under the stationary law.
template <class G>
double stationary_init(const ProcessModel& model, G& gen) {
    Simulator sim(model);
    return sim.init(gen);
}

inline double stationary_init(const ProcessModel& model, std::uint64_t seed) {
    Xoshiro256pp gen(seed);
    return stationary_init(model, gen);
}

// X_1..X_n, drawing initialisation and innovations from gen.
template <class G>
std::vector<double> simulate_with(const ProcessModel& model, std::size_t n, G& gen) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    Simulator sim(model);
    sim.init(gen);
    std::vector<double> out(n);
    for (auto& x : out) x = sim.step(gen());
    return out;
}

inline std::vector<double> simulate(const ProcessModel& model, std::size_t n, std::uint64_t seed) {
    Xoshiro256pp gen(seed);
    return simulate_with(model, n, gen);
}

// ---------------------------------------------------------------------------
// Coupled blocks
// ---------------------------------------------------------------------------

struct CoupledBlock {
    std::size_t j = 0;
    std::size_t r = 0;
    std::vector<double> original;  // X_{r+j} .. X_{2r+j-1}
    std::vector<double> starred;   // X*_{r+j} .. X*_{2r+j-1}
    double distance_sum = 0.0;
};

struct CouplingOptions {
    std::optional<std::size_t> horizon;  // reject blocks ending after this index
    bool share_prefix = false;           // test hook: identical pre-split innovations
};

// Two copies of the process: independent initialisation and innovations up to
// index j, the same innovations afterwards. The starred block is therefore
// independent of X_1..X_j and has the law of the original block.
template <class GA, class GB, class GS>
CoupledBlock simulate_coupled_block_with(const ProcessModel& model, std::size_t j, std::size_t r, GA& prefix_a,
                                         GB& prefix_b, GS& shared, std::optional<std::size_t> horizon = {}) {
    if (j == 0 || r == 0) throw std::invalid_argument("j and r must be positive");
    const std::size_t last = 2 * r + j - 1;
    if (horizon && last > *horizon)
        throw std::out_of_range("coupled block ends at " + std::to_string(last) + " beyond horizon " +
                                std::to_string(*horizon));
    Simulator a(model);
    Simulator b(model);
    a.init(prefix_a);
    b.init(prefix_b);
    for (std::size_t t = 1; t <= j; ++t) {
        a.step(prefix_a());
        b.step(prefix_b());
    }
    CoupledBlock block;
    block.j = j;
    block.r = r;
    block.original.reserve(r);
    block.starred.reserve(r);
    for (std::size_t t = j + 1; t <= last; ++t) {
        const std::uint64_t raw = shared();
        const double x = a.step(raw);
        const double y = b.step(raw);
        if (t >= r + j) {
            block.original.push_back(x);
            block.starred.push_back(y);
            block.distance_sum += std::fabs(x - y);
        }
    }
    return block;
}

inline CoupledBlock simulate_coupled_block(const ProcessModel& model, std::size_t j, std::size_t r,
                                           std::uint64_t seed, const CouplingOptions& opts = {}) {
    Xoshiro256pp prefix_a(derive_seed(seed, 0));
    Xoshiro256pp prefix_b(derive_seed(seed, opts.share_prefix ? 0 : 1));
    Xoshiro256pp shared(derive_seed(seed, 2));
    return simulate_coupled_block_with(model, j, r, prefix_a, prefix_b, shared, opts.horizon);
}

// ---------------------------------------------------------------------------
// Observables (1-Lipschitz, |f| <= 1/2, centred under the stationary law)
// ---------------------------------------------------------------------------

struct ObservableF {
    enum class Kind { centered_identity, centered_cosine, zero };
    Kind kind = Kind::centered_identity;
    int omega = 1;
    double mu = 0.5;  // centring constant

    double operator()(double u) const {
        switch (kind) {
            case Kind::centered_identity: return u - mu;
            case Kind::centered_cosine:
                return std::cos(2.0 * std::numbers::pi * omega * u) / (4.0 * std::numbers::pi * omega) - mu;
            case Kind::zero: return 0.0;
        }
        return 0.0;
    }

    double lipschitz_constant() const { return kind == Kind::centered_cosine ? 0.5 : (kind == Kind::zero ? 0.0 : 1.0); }
};

inline std::string observable_name(const ObservableF& f) {
    switch (f.kind) {
        case ObservableF::Kind::centered_identity: return "centered_identity";
        case ObservableF::Kind::centered_cosine: return "centered_cosine(" + std::to_string(f.omega) + ")";
        case ObservableF::Kind::zero: return "zero";
    }
    return "?";
}

inline ObservableF centered_identity(const ProcessModel& model) {
    return {ObservableF::Kind::centered_identity, 1, stationary_mean(model)};
}

// Exactly centred for models with a Uniform[0,1] marginal; otherwise the
// centring constant is a Monte Carlo mean of cos(2 pi omega X_0)/(4 pi omega).
inline ObservableF centered_cosine(const ProcessModel& model, int omega, std::size_t centering_reps = 200000,
                                   std::uint64_t seed = 0x5EEDC05ULL) {
    if (omega <= 0) throw std::domain_error("omega must be a positive integer");
    ObservableF f{ObservableF::Kind::centered_cosine, omega, 0.0};
    if (std::holds_alternative<IidUniform>(model) || std::holds_alternative<DoublingMap>(model)) return f;
    double sum = 0.0;
    for (std::size_t i = 0; i < centering_reps; ++i) sum += f(stationary_init(model, derive_seed(seed, i)));
    f.mu = sum / static_cast<double>(centering_reps);
    return f;
}

inline std::vector<double> eval_observable(const ObservableF& f, std::span<const double> trajectory) {
    std::vector<double> out(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const double u = trajectory[i];
        if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("trajectory value outside [0,1]");
        out[i] = std::clamp(f(u), -0.5, 0.5);
    }
    return out;
}

}  // namespace wdb
