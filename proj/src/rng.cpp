#include "pgos/rng.hpp"

#include <cassert>

namespace pgos {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t hash_label(std::string_view label) {
  // FNV-1a over the label bytes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

RngStream RngStream::derive(std::string_view label, std::uint64_t a,
                            std::uint64_t b, std::uint64_t c) const {
  std::uint64_t h = seed_;
  h = mix64(h ^ hash_label(label));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return RngStream(h);
}

double RngStream::uniform01() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::normal() {
  return std::normal_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::normal(double mu, double sigma) {
  return mu + sigma * normal();
}

std::uint64_t RngStream::uniform_u64(std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
}

int RngStream::uniform_int(int lo, int hi) {
  assert(lo <= hi);
  return std::uniform_int_distribution<int>(lo, hi)(engine_);
}

bool RngStream::bernoulli(double p) { return uniform01() < p; }

}  // namespace pgos
