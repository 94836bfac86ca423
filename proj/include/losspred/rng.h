#ifndef LOSSPRED_RNG_H_
#define LOSSPRED_RNG_H_

#include <cstdint>
#include <random>
#include <vector>

namespace losspred {

// Seeded generator with portable distributions. std::mt19937_64 is fully
// specified by the standard, but the std:: distributions are not, so the
// uniform/normal transforms are done here to keep outputs bit-identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace losspred

#endif  // LOSSPRED_RNG_H_
