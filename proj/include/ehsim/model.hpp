#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ehsim::model {

// Named sub-streams so every stochastic component draws from its own
// deterministic sequence; replications get further disjoint streams.
enum class Stream : std::uint32_t {
  channel = 0,
  tx_arrivals = 1,
  rx_arrivals = 2,
  policy_coin = 3,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, Stream stream, std::uint64_t replication = 0);

  double uniform();              // [0, 1), 53-bit resolution
  double exponential();          // mean-1 exponential
  bool coin(double p);           // true with probability p

 private:
  std::mt19937_64 gen_;
};

// Slot energy-arrival law. Amounts are nonnegative; second_moment and the
// (upper) median are what the bounds consume.
class ArrivalModel {
 public:
  enum class Kind { bernoulli, uniform, discrete };

  ArrivalModel();  // Bernoulli(1/2, 1)
  static ArrivalModel bernoulli(double p, double energy);
  static ArrivalModel uniform(double lo, double hi);
  static ArrivalModel discrete(std::vector<double> values,
                               std::vector<double> probs);

  Kind kind() const { return kind_; }
  double sample(RngStream& rng) const;
  double mean() const;
  double second_moment() const;

  // Largest x with P(X >= x) >= 1/2. This is the convention under which a
  // Bernoulli(1/2, E) arrival stores exactly its quantum half the time.
  double median() const;

  double prob_greater(double x) const;  // P(X > x)
  double cdf(double x) const;           // P(X <= x)
  double max_value() const;             // sup of the support

  // Whether the quantized-arrival test at threshold delta should be
  // inclusive (X >= delta). Strict comparison is the default; inclusive is
  // needed when the median sits on an atom, so that the storage probability
  // stays >= 1/2.
  bool quantize_inclusive(double delta) const;

  // Canonical spec string, e.g. "bernoulli:p=0.5,e=10".
  std::string describe() const;

  // Bernoulli accessors (throw unless kind() == bernoulli).
  double bernoulli_p() const;
  double bernoulli_energy() const;

 private:
  Kind kind_ = Kind::bernoulli;
  double p_ = 0.5, energy_ = 1.0;    // bernoulli
  double lo_ = 0.0, hi_ = 1.0;       // uniform
  std::vector<double> values_;       // discrete, ascending
  std::vector<double> probs_;
  std::vector<double> cum_;
};

// Rayleigh-faded link: the power gain |h|^2 is unit-mean exponential.
struct ChannelModel {
  double sample(RngStream& rng) const { return rng.exponential(); }
};

// Finite buffer updated as: spend first (must not exceed the level), then
// add the slot's harvest, then clamp at capacity (overflow is lost).
class Battery {
 public:
  Battery(double level, double capacity);

  double level() const { return level_; }
  double capacity() const { return capacity_; }

  void step(double spend, double harvest);  // throws NeutralityViolation

 private:
  double level_;
  double capacity_;
};

}  // namespace ehsim::model
