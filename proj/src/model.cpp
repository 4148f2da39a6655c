#include "ehsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "ehsim/errors.hpp"

namespace ehsim::model {

namespace {

// splitmix64 finalizer; decorrelates structured (seed, stream, rep) triples.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_state(std::uint64_t seed, Stream stream,
                           std::uint64_t replication) {
  std::uint64_t s = mix64(seed ^ 0xD1B54A32D192ED03ULL);
  s = mix64(s ^ (static_cast<std::uint64_t>(stream) + 1) * 0x9E3779B97F4A7C15ULL);
  s = mix64(s ^ (replication + 1) * 0xBF58476D1CE4E5B9ULL);
  return s;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, Stream stream, std::uint64_t replication)
    : gen_(derive_state(seed, stream, replication)) {}

double RngStream::uniform() {
  // Top 53 bits -> [0, 1); identical across platforms for a given seed.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngStream::exponential() { return -std::log1p(-uniform()); }

bool RngStream::coin(double p) { return uniform() < p; }

ArrivalModel::ArrivalModel() = default;

ArrivalModel ArrivalModel::bernoulli(double p, double energy) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("bernoulli arrivals: p must be in [0, 1]");
  if (!(energy > 0.0) || !std::isfinite(energy)) {
    throw ConfigError("bernoulli arrivals: energy must be positive and finite");
  }
  ArrivalModel m;
  m.kind_ = Kind::bernoulli;
  m.p_ = p;
  m.energy_ = energy;
  return m;
}

ArrivalModel ArrivalModel::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw ConfigError("uniform arrivals: need 0 <= lo < hi < inf");
  }
  ArrivalModel m;
  m.kind_ = Kind::uniform;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

ArrivalModel ArrivalModel::discrete(std::vector<double> values,
                                    std::vector<double> probs) {
  if (values.empty() || values.size() != probs.size()) {
    throw ConfigError("discrete arrivals: values and probs must be nonempty and equal-length");
  }
  std::vector<std::pair<double, double>> atoms(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw ConfigError("discrete arrivals: values must be finite and >= 0");
    }
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw ConfigError("discrete arrivals: probabilities must be in [0, 1]");
    }
    atoms[i] = {values[i], probs[i]};
    total += probs[i];
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ConfigError("discrete arrivals: probabilities must sum to 1");
  }
  std::sort(atoms.begin(), atoms.end());
  ArrivalModel m;
  m.kind_ = Kind::discrete;
  for (const auto& [v, p] : atoms) {
    if (!m.values_.empty() && v == m.values_.back()) {
      m.probs_.back() += p;  // merge duplicate atoms
    } else {
      m.values_.push_back(v);
      m.probs_.push_back(p);
    }
  }
  m.cum_.resize(m.probs_.size());
  std::partial_sum(m.probs_.begin(), m.probs_.end(), m.cum_.begin());
  m.cum_.back() = 1.0;
  return m;
}

double ArrivalModel::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::bernoulli:
      return rng.coin(p_) ? energy_ : 0.0;
    case Kind::uniform:
      return lo_ + rng.uniform() * (hi_ - lo_);
    case Kind::discrete: {
      const double u = rng.uniform();
      for (std::size_t i = 0; i < cum_.size(); ++i) {
        if (u < cum_[i]) return values_[i];
      }
      return values_.back();
    }
  }
  return 0.0;
}

double ArrivalModel::mean() const {
  switch (kind_) {
    case Kind::bernoulli:
      return p_ * energy_;
    case Kind::uniform:
      return 0.5 * (lo_ + hi_);
    case Kind::discrete: {
      double s = 0.0;
      for (std::size_t i = 0; i < values_.size(); ++i) s += probs_[i] * values_[i];
      return s;
    }
  }
  return 0.0;
}

double ArrivalModel::second_moment() const {
  switch (kind_) {
    case Kind::bernoulli:
      return p_ * energy_ * energy_;
    case Kind::uniform:
      return (lo_ * lo_ + lo_ * hi_ + hi_ * hi_) / 3.0;
    case Kind::discrete: {
      double s = 0.0;
      for (std::size_t i = 0; i < values_.size(); ++i) {
        s += probs_[i] * values_[i] * values_[i];
      }
      return s;
    }
  }
  return 0.0;
}

double ArrivalModel::median() const {
  switch (kind_) {
    case Kind::bernoulli:
      // P(X >= energy) = p; the upper median is energy iff p >= 1/2.
      return p_ >= 0.5 ? energy_ : 0.0;
    case Kind::uniform:
      return 0.5 * (lo_ + hi_);
    case Kind::discrete: {
      double tail = 0.0;
      for (std::size_t i = values_.size(); i-- > 0;) {
        tail += probs_[i];
        if (tail >= 0.5 - 1e-12) return values_[i];
      }
      return values_.front();
    }
  }
  return 0.0;
}

double ArrivalModel::prob_greater(double x) const {
  switch (kind_) {
    case Kind::bernoulli:
      if (x < 0.0) return 1.0;
      return x < energy_ ? p_ : 0.0;
    case Kind::uniform: {
      if (x <= lo_) return 1.0;
      if (x >= hi_) return 0.0;
      return (hi_ - x) / (hi_ - lo_);
    }
    case Kind::discrete: {
      double tail = 0.0;
      for (std::size_t i = values_.size(); i-- > 0;) {
        if (values_[i] > x) tail += probs_[i];
        else break;
      }
      return tail;
    }
  }
  return 0.0;
}

double ArrivalModel::cdf(double x) const { return 1.0 - prob_greater(x); }

double ArrivalModel::max_value() const {
  switch (kind_) {
    case Kind::bernoulli:
      return p_ > 0.0 ? energy_ : 0.0;
    case Kind::uniform:
      return hi_;
    case Kind::discrete:
      return values_.back();
  }
  return 0.0;
}

bool ArrivalModel::quantize_inclusive(double delta) const {
  return prob_greater(delta) < 0.5 - 1e-12;
}

std::string ArrivalModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::bernoulli:
      os << "bernoulli:p=" << p_ << ",e=" << energy_;
      break;
    case Kind::uniform:
      os << "uniform:" << lo_ << "," << hi_;
      break;
    case Kind::discrete: {
      os << "discrete:values=";
      for (std::size_t i = 0; i < values_.size(); ++i) {
        os << (i ? "|" : "") << values_[i];
      }
      os << ",probs=";
      for (std::size_t i = 0; i < probs_.size(); ++i) {
        os << (i ? "|" : "") << probs_[i];
      }
      break;
    }
  }
  return os.str();
}

double ArrivalModel::bernoulli_p() const {
  if (kind_ != Kind::bernoulli) throw ConfigError("arrivals: not a bernoulli model");
  return p_;
}

double ArrivalModel::bernoulli_energy() const {
  if (kind_ != Kind::bernoulli) throw ConfigError("arrivals: not a bernoulli model");
  return energy_;
}

Battery::Battery(double level, double capacity) : level_(level), capacity_(capacity) {
  if (!(capacity > 0.0) || !std::isfinite(capacity)) {
    throw ConfigError("battery: capacity must be positive and finite");
  }
  if (!(level >= 0.0) || level > capacity) {
    throw ConfigError("battery: initial level must lie in [0, capacity]");
  }
}

void Battery::step(double spend, double harvest) {
  if (!(spend >= 0.0)) throw NeutralityViolation("battery: negative spend");
  if (spend > level_) throw NeutralityViolation("battery: spend exceeds stored energy");
  if (!(harvest >= 0.0)) throw NeutralityViolation("battery: negative harvest");
  level_ = std::min(capacity_, (level_ - spend) + harvest);
  if (level_ < 0.0) level_ = 0.0;
}

}  // namespace ehsim::model
