#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fairsynth {

// Exit-code-bearing error categories. The CLI maps these to process exit
// codes; library code throws them directly.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 2
};
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 3
};
struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 4
};

enum class Role : std::uint8_t { Unlabeled = 0, Protected, Admissible, Outcome };

std::string role_name(Role r);
Role role_from_name(std::string_view s);

// Deterministic stream seeded from (root seed, label). All randomness in the
// library flows through labeled streams so a fixed root seed reproduces every
// output bit-for-bit regardless of call interleaving elsewhere.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);
    static RngStream derive(std::uint64_t root_seed, std::string_view label);

    std::uint64_t next_u64();
    double uniform();                 // [0, 1)
    double gaussian(double sigma);    // Box-Muller; fixed transform for reproducibility
    std::size_t uniform_index(std::size_t n);

  private:
    std::uint64_t s_[4];
    static std::uint64_t splitmix(std::uint64_t& x);
};

std::uint64_t fnv1a64(std::string_view s);

}  // namespace fairsynth
