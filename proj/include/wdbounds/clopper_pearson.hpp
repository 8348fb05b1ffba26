#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>

#include <boost/math/distributions/beta.hpp>

namespace wdb {

struct BinomialInterval {
    double low = 0.0;
    double high = 1.0;
};

// Exact two-sided Clopper-Pearson interval at level 1 - alpha from beta
// quantiles: low = B^-1(alpha/2; h, m-h+1), high = B^-1(1-alpha/2; h+1, m-h).
inline BinomialInterval clopper_pearson(std::uint64_t hits, std::uint64_t reps, double alpha) {
    if (reps == 0) throw std::invalid_argument("clopper_pearson needs at least one trial");
    if (hits > reps) throw std::invalid_argument("hits exceed trials");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");
    const double h = static_cast<double>(hits);
    const double m = static_cast<double>(reps);
    BinomialInterval ci;
    if (hits > 0) ci.low = boost::math::quantile(boost::math::beta_distribution<double>(h, m - h + 1.0), alpha / 2.0);
    if (hits < reps)
        ci.high = boost::math::quantile(boost::math::beta_distribution<double>(h + 1.0, m - h), 1.0 - alpha / 2.0);
    return ci;
}

}  // namespace wdb
