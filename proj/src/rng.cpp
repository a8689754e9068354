#include "kivafair/rng.hpp"

#include <limits>

#include "kivafair/error.hpp"

namespace kivafair {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma parameters must be positive");
  }
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

double Rng::inv_gamma(double shape, double rate) {
  double g = gamma(shape, 1.0 / rate);
  // Tiny shapes can underflow the gamma draw; keep the result finite.
  if (g < std::numeric_limits<double>::min()) g = std::numeric_limits<double>::min();
  return 1.0 / g;
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  const double s = x + y;
  if (s == 0.0) return a >= b ? 1.0 : 0.0;
  return x / s;
}

}  // namespace kivafair
