#include "fairsynth/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace fairsynth {

void RdpAccountant::charge(std::string label, const RdpCost& cost) {
    if (!(cost.rho >= 0.0)) {
        throw ConfigError("rdp charge must be non-negative: " + label);
    }
    entries_.push_back(Entry{std::move(label), cost.rho});
    total_ += entries_.back().rho;
}

void RdpAccountant::assert_total(double rho_budget) const {
    if (total_ > rho_budget + 1e-12) {
        throw BudgetError("rdp budget exceeded: spent " + std::to_string(total_) +
                          " of " + std::to_string(rho_budget));
    }
}

const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> grid = {1.25, 1.5, 1.75, 2.0, 2.5, 3.0,
                                             4.0,  5.0, 6.0,  8.0, 10.0, 12.0,
                                             16.0, 20.0, 24.0, 32.0, 48.0, 64.0};
    return grid;
}

DpPoint rdp_to_dp(double rho, double delta, const std::vector<double>& alphas) {
    if (alphas.empty()) throw ConfigError("alpha grid is empty");
    if (!(rho >= 0.0)) throw ConfigError("rho must be non-negative");
    if (!(delta > 0.0) || delta > 1.0) throw ConfigError("delta must lie in (0, 1]");

    std::vector<double> grid = alphas;
    std::sort(grid.begin(), grid.end());
    const double log_term = std::log(1.0 / delta);
    DpPoint best{std::numeric_limits<double>::infinity(), 0.0};
    for (double alpha : grid) {
        if (!(alpha > 1.0)) throw ConfigError("alpha grid values must exceed 1");
        // Strict improvement keeps the smallest alpha among ties.
        const double eps = alpha * rho + log_term / (alpha - 1.0);
        if (eps < best.epsilon) best = DpPoint{eps, alpha};
    }
    return best;
}

double dp_to_rho(double epsilon_target, double delta,
                 const std::vector<double>& alphas) {
    if (!(epsilon_target > 0.0)) throw ConfigError("epsilon target must be positive");
    const double floor_eps = rdp_to_dp(0.0, delta, alphas).epsilon;
    if (floor_eps > epsilon_target + 1e-9) {
        throw BudgetError("epsilon target unattainable at this delta: minimum is " +
                          std::to_string(floor_eps));
    }

    double lo = 0.0;
    double hi = 1.0;
    int expand = 0;
    while (rdp_to_dp(hi, delta, alphas).epsilon < epsilon_target) {
        hi *= 2.0;
        if (++expand > 200) {
            throw BudgetError("epsilon target out of search range");
        }
    }
    // Epsilon is piecewise linear in rho with slope in [min alpha, max alpha],
    // so shrinking [lo, hi] far below 1e-9 pins epsilon as well.
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (rdp_to_dp(mid, delta, alphas).epsilon <= epsilon_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

NoisyValue gaussian_mechanism(double value, double sensitivity, double sigma,
                              RngStream& rng) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(sensitivity > 0.0)) throw ConfigError("sensitivity must be positive");
    const double rho = sensitivity * sensitivity / (2.0 * sigma * sigma);
    return NoisyValue{value + rng.gaussian(sigma), RdpCost{rho}};
}

Selection exponential_mechanism(const std::vector<double>& scores, double epsilon,
                                double sensitivity, RngStream& rng) {
    if (scores.empty()) {
        throw ConfigError("exponential mechanism needs at least one candidate");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(sensitivity > 0.0)) throw ConfigError("sensitivity must be positive");

    // Max-score shift keeps every weight in (0, 1]; the distribution is
    // unchanged.
    const double top = *std::max_element(scores.begin(), scores.end());
    const double scale = epsilon / (2.0 * sensitivity);
    std::vector<double> weights(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        weights[i] = std::exp(scale * (scores[i] - top));
        total += weights[i];
    }

    double u = rng.uniform() * total;
    std::size_t chosen = scores.size() - 1;  // guards against rounding spill
    for (std::size_t i = 0; i < scores.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) {
            chosen = i;
            break;
        }
    }
    return Selection{chosen, RdpCost{epsilon * epsilon / 8.0}};
}

}  // namespace fairsynth
