#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fairsynth/common.hpp"

namespace fairsynth {

// Linear Renyi cost curve gamma(alpha) = alpha * rho.
struct RdpCost {
    double rho = 0.0;

    double gamma(double alpha) const { return alpha * rho; }
};

// Single-writer composition ledger. Charges add; order does not matter.
class RdpAccountant {
  public:
    struct Entry {
        std::string label;
        double rho;
    };

    void charge(std::string label, const RdpCost& cost);

    // Throws BudgetError when the running total exceeds the budget beyond
    // 1e-12 slack. Meant to run before any data release.
    void assert_total(double rho_budget) const;

    double total_rho() const { return total_; }
    const std::vector<Entry>& entries() const { return entries_; }

  private:
    std::vector<Entry> entries_;
    double total_ = 0.0;
};

// Default search grid {1.25, ..., 64}; every value exceeds 1.
const std::vector<double>& default_alpha_grid();

struct DpPoint {
    double epsilon;
    // Grid value attaining epsilon; ties resolve to the smaller alpha.
    double alpha;
};

// min over the grid of alpha * rho + ln(1/delta) / (alpha - 1).
DpPoint rdp_to_dp(double rho, double delta,
                  const std::vector<double>& alphas = default_alpha_grid());

// Inverse of rdp_to_dp in rho, accurate to 1e-9 in epsilon. Throws
// BudgetError when no rho >= 0 reaches the target at this delta.
double dp_to_rho(double epsilon_target, double delta,
                 const std::vector<double>& alphas = default_alpha_grid());

struct NoisyValue {
    double value;
    RdpCost cost;
};

// value + Normal(0, sigma^2); cost rho = sensitivity^2 / (2 sigma^2).
NoisyValue gaussian_mechanism(double value, double sensitivity, double sigma,
                              RngStream& rng);

struct Selection {
    std::size_t index;
    RdpCost cost;
};

// Samples index i with probability proportional to
// exp(epsilon * scores[i] / (2 * sensitivity)); cost rho = epsilon^2 / 8.
Selection exponential_mechanism(const std::vector<double>& scores,
                                double epsilon, double sensitivity,
                                RngStream& rng);

}  // namespace fairsynth
