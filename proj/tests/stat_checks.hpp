#pragma once

#include <cstdint>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "cramsim/sim_analysis.hpp"

namespace cramsim::testing {

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    /// Outcomes the exact oracle rules out but the sampler produced.
    std::uint64_t impossible_hits = 0;
};

/// Pearson goodness of fit of Monte Carlo counts against exact
/// probabilities, summed over input states. Bins with an expected count
/// below 5 are pooled per state.
inline ChiSquareResult chi_square(const DistributionSet& mc, const DistributionSet& exact) {
    ChiSquareResult r;
    const double n = static_cast<double>(mc.trials);
    for (std::size_t i = 0; i < exact.states.size(); ++i) {
        std::map<std::uint64_t, double> prob(exact.states[i].probability.begin(), exact.states[i].probability.end());
        std::map<std::uint64_t, double> seen;
        for (const auto& [v, c] : mc.states.at(i).counts) {
            seen[v] = static_cast<double>(c);
            if (prob.find(v) == prob.end() || prob[v] <= 0.0) r.impossible_hits += c;
        }
        double pooled_e = 0.0;
        double pooled_o = 0.0;
        int bins = 0;
        for (const auto& [v, p] : prob) {
            const double e = p * n;
            const double o = seen.count(v) ? seen[v] : 0.0;
            if (e >= 5.0) {
                r.statistic += (o - e) * (o - e) / e;
                ++bins;
            } else {
                pooled_e += e;
                pooled_o += o;
            }
        }
        if (pooled_e > 0.0) {
            r.statistic += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
            ++bins;
        }
        r.dof += bins - 1;
    }
    if (r.dof > 0) {
        boost::math::chi_squared dist(r.dof);
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

}  // namespace cramsim::testing
