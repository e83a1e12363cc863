#include "dfgan/rng.h"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dfgan/errors.h"

namespace dfgan {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ConfigError("Rng::index: empty range");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

RealMatrix Rng::normal_matrix(std::size_t rows, std::size_t cols, double stddev) {
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * normal();
  return m;
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << ' ';
  if (spare_) {
    os << "spare " << std::bit_cast<std::uint64_t>(*spare_);
  } else {
    os << "nospare 0";
  }
  return os.str();
}

void Rng::deserialize(const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 engine;
  std::string tag;
  std::uint64_t bits = 0;
  is >> engine >> tag >> bits;
  if (!is || (tag != "spare" && tag != "nospare")) {
    throw ConfigError("Rng::deserialize: malformed generator state");
  }
  engine_ = engine;
  if (tag == "spare") {
    spare_ = std::bit_cast<double>(bits);
  } else {
    spare_.reset();
  }
}

bool Rng::operator==(const Rng& other) const {
  return engine_ == other.engine_ && spare_ == other.spare_;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dfgan
