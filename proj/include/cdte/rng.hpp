#pragma once

#include <cmath>
#include <cstdint>

namespace cdte {

// Standard normal quantile (Wichura's AS241 rational approximation,
// accurate to ~1e-15 over (0,1)).
double normal_quantile(double p);

double normal_cdf(double x);
double normal_pdf(double x);

// splitmix64 step; also used to derive child stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Combine a root seed with a stream label into an independent child seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Small counter-free PRNG (xoshiro256**) with explicit, implementation-pinned
// sampling routines. std:: distributions are not used anywhere: their output
// is implementation-defined, and we promise bit-reproducible runs per seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi);

  // Inverse-CDF sampling; one uniform per normal draw.
  double normal();

  double lognormal(double mu, double sigma);

  bool bernoulli(double p);

  // Uniform integer in [0, n), n >= 1.
  int uniform_int(int n);

  // Child generator for an independent, reproducible stream. Forks derive
  // from the construction seed, not the current state, so fork(k) is the
  // same no matter how many draws were made in between.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
};

}  // namespace cdte
