#pragma once

// Reproducible random instances. Each trial draws from its own engine seeded from
// (seed, stream, index), so results do not depend on evaluation order or thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/geometry.hpp"
#include "rhobound/orbitals.hpp"
#include "rhobound/wavefunctions.hpp"

namespace rhobound {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

inline std::mt19937_64 trial_engine(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  const std::uint64_t s = splitmix64(splitmix64(seed ^ hash_name(stream)) + index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 uniform_point(std::mt19937_64& rng, double half_width) {
  return Vec3(uniform(rng, -half_width, half_width), uniform(rng, -half_width, half_width), uniform(rng, -half_width, half_width));
}

struct RandomBasisOptions {
  double exponent_lo{0.4};
  double exponent_hi{2.5};
  double center_half_width{1.0};
};

/// `n` normalized s-primitives with log-uniform exponents, orthonormalized.
inline std::shared_ptr<const OrbitalSet> random_orbital_set(std::mt19937_64& rng, int n, const RandomBasisOptions& opts = {}) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<Orbital> fns;
    for (int i = 0; i < n; ++i) {
      const double alpha = std::exp(uniform(rng, std::log(opts.exponent_lo), std::log(opts.exponent_hi)));
      fns.push_back(normalized_primitive(uniform_point(rng, opts.center_half_width), alpha));
    }
    try {
      return std::make_shared<const OrbitalSet>(orthonormalize(OrbitalSet(fns), OrthonormalizeOptions{1e-4, 1e6}));
    } catch (const SingularGram&) {
      // redraw nearly dependent sets
    }
  }
  throw NumericFailure("could not draw a well-conditioned random basis");
}

/// Normalized state with Gaussian coefficients on `dets` distinct random determinants
/// (all of them when dets <= 0 or dets exceeds the full CI dimension).
inline CIState random_ci_state(std::mt19937_64& rng, std::shared_ptr<const OrbitalSet> orbitals, int electrons, int dets = 0) {
  auto all = all_determinants(orbitals->size(), electrons);
  if (dets > 0 && dets < static_cast<int>(all.size())) {
    std::shuffle(all.begin(), all.end(), rng);
    all.erase(all.begin() + dets, all.end());
    std::sort(all.begin(), all.end());
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CITerm> terms;
  for (auto& d : all) terms.push_back({normal(rng), std::move(d)});
  return normalize(CIState(std::move(orbitals), std::move(terms)));
}

/// Ball or box near the origin, sized to cut through a unit-scale density.
inline Region random_region(std::mt19937_64& rng) {
  if (uniform(rng, 0.0, 1.0) < 0.5) return Region(Ball{uniform_point(rng, 1.0), uniform(rng, 0.2, 2.0)});
  const Vec3 c = uniform_point(rng, 1.0);
  const Vec3 h(uniform(rng, 0.1, 1.5), uniform(rng, 0.1, 1.5), uniform(rng, 0.1, 1.5));
  return Region(Box{c - h, c + h});
}

/// Nuclei in a box of the given half width with pairwise spacing > a, drawn by rejection.
inline NuclearFrame random_frame(std::mt19937_64& rng, int nuclei, double a, int max_charge = 1, double half_width = 2.0) {
  std::vector<Nucleus> out;
  for (int attempt = 0; static_cast<int>(out.size()) < nuclei; ++attempt) {
    if (attempt > 100000) throw NumericFailure("could not place nuclei with the requested spacing");
    const Vec3 p = uniform_point(rng, half_width);
    bool ok = true;
    for (const auto& n : out) ok = ok && (n.position - p).norm() > a * 1.05;
    if (!ok) continue;
    const int z = 1 + static_cast<int>(std::uniform_int_distribution<int>(0, max_charge - 1)(rng));
    out.push_back({p, z});
  }
  return NuclearFrame(std::move(out), a);
}

}  // namespace rhobound
