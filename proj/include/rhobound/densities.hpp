#pragma once

// Region functionals of one- and two-electron densities:
//   P   = int_{x_1 in Omega} |Psi|^2             (probability for a distinguished electron)
//   Q   = int_{Omega x Omega} nu_Psi              (nu normalized to unit mass)
//   int_Omega rho = N P
//   occupancy: probability that exactly k electrons lie in Omega, k = 0..N.
// Algebraic paths work on the restricted overlap matrix S_Omega; the brute-force paths
// evaluate Psi pointwise on product grids and serve as the independent oracle.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/geometry.hpp"
#include "rhobound/orbitals.hpp"
#include "rhobound/parallel.hpp"
#include "rhobound/wavefunctions.hpp"

namespace rhobound {

/// Symbolic Omega = R^3.
struct WholeSpace {};

struct DensityFunctionals {
  int electrons{0};
  double P{0.0};
  std::optional<double> Q;  // absent for N = 1
  double rho_integral{0.0};

  /// N(N-1) Q: the pair density normalized to the number of ordered pairs.
  std::optional<double> pair_count_mass() const {
    if (!Q) return std::nullopt;
    return *Q * electrons * (electrons - 1);
  }
};

struct OccupancyDistribution {
  std::vector<double> probabilities;  // index k = number of electrons in Omega

  double total() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) s += k * probabilities[k];
    return s;
  }
  /// Total variation distance.
  double distance(const OccupancyDistribution& other) const {
    const std::size_t n = std::max(probabilities.size(), other.probabilities.size());
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = k < probabilities.size() ? probabilities[k] : 0.0;
      const double b = k < other.probabilities.size() ? other.probabilities[k] : 0.0;
      s += std::abs(a - b);
    }
    return 0.5 * s;
  }
};

namespace detail {

inline DensityFunctionals assemble(int n, double p, std::optional<double> q) {
  DensityFunctionals f;
  f.electrons = n;
  f.P = p;
  f.Q = q;
  f.rho_integral = n * p;
  return f;
}

}  // namespace detail

/// Slater-Condon path: one-body operator S/N for P, factorized two-body S (x) S for Q.
inline DensityFunctionals functionals(const CIState& state, const Matrix& s) {
  const int n = state.electrons();
  const double p = one_body_expectation(state, s) / n;
  std::optional<double> q;
  if (n >= 2) {
    const double pairs = expectation(state, [&](const Determinant& a, const Determinant& b) { return two_body_element(a, b, s); });
    q = 2.0 * pairs / (n * (n - 1.0));
  }
  return detail::assemble(n, p, q);
}

inline DensityFunctionals functionals(const CIState& state, const RegionOverlap& overlap) {
  if (overlap.dim() != state.orbitals().size()) throw InvalidArgument("region overlap does not match the state's orbital set");
  return functionals(state, overlap.matrix);
}

inline DensityFunctionals functionals(const CIState& state, const Region& region, double tol = 1e-8) {
  return functionals(state, region_overlap(state.orbitals(), region, tol));
}

inline DensityFunctionals functionals(const CIState& state, WholeSpace) { return functionals(state, state.orbitals().gram()); }

inline void require_symmetric(const Matrix& s) {
  if (s.rows() != s.cols()) throw InvalidArgument("overlap matrix must be square");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InvalidArgument("overlap matrix is not Hermitian");
}

/// Closed form for a single determinant whose orbitals' restricted overlaps are `s` (N x N):
/// P = tr S / N,  Q = [(tr S)^2 - tr(S^2)] / (N (N-1)).
inline DensityFunctionals determinant_functionals(const Matrix& s, int electrons) {
  require_symmetric(s);
  if (s.rows() != electrons) throw InvalidArgument("determinant overlap block must be N x N");
  const double tr = s.trace();
  std::optional<double> q;
  if (electrons >= 2) q = (tr * tr - (s * s).trace()) / (electrons * (electrons - 1.0));
  return detail::assemble(electrons, tr / electrons, q);
}

inline Matrix determinant_block(const Matrix& s, const Determinant& det) {
  const int n = det.electrons();
  Matrix block(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) block(i, j) = s(det[i], det[j]);
  return block;
}

inline DensityFunctionals determinant_functionals(const RegionOverlap& overlap, const Determinant& det) {
  return determinant_functionals(determinant_block(overlap.matrix, det), det.electrons());
}

/// Counting distribution of a determinant: coefficients of prod_i (1 - l_i + l_i z) over the
/// eigenvalues l_i of its N x N restricted overlap block.
inline OccupancyDistribution occupancy_determinant(const Matrix& s) {
  require_symmetric(s);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
  OccupancyDistribution out;
  out.probabilities = {1.0};
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    double lam = eig.eigenvalues()[i];
    if (lam < -1e-6 || lam > 1.0 + 1e-6)
      throw InvalidArgument("restricted overlap eigenvalue " + format_number(lam) + " outside [0, 1]");
    lam = std::clamp(lam, 0.0, 1.0);
    std::vector<double> next(out.probabilities.size() + 1, 0.0);
    for (std::size_t k = 0; k < out.probabilities.size(); ++k) {
      next[k] += (1.0 - lam) * out.probabilities[k];
      next[k + 1] += lam * out.probabilities[k];
    }
    out.probabilities = std::move(next);
  }
  return out;
}

inline OccupancyDistribution occupancy_determinant(const RegionOverlap& overlap, const Determinant& det) {
  return occupancy_determinant(determinant_block(overlap.matrix, det));
}

/// Counting distribution of any CI state from the generating function
/// G(z) = <Psi| prod_i (1 + (z - 1) chi(x_i)) |Psi> = sum_{m,n} c_m c_n det M[D_m, D_n],
/// M = I + (z - 1) S, sampled at N + 1 nodes and interpolated.
inline OccupancyDistribution occupancy(const CIState& state, const Matrix& s) {
  require_symmetric(s);
  if (s.rows() != state.orbitals().size()) throw InvalidArgument("region overlap does not match the state's orbital set");
  const int n = state.electrons();
  const auto& terms = state.terms();
  Matrix vander(n + 1, n + 1);
  Vector g(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double z = 0.5 - 0.5 * std::cos(kPi * (j + 0.5) / (n + 1));
    const Matrix m = Matrix::Identity(s.rows(), s.cols()) + (z - 1.0) * s;
    double acc = 0.0;
    for (const auto& a : terms)
      for (const auto& b : terms) {
        Matrix block(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) block(r, c) = m(a.determinant[r], b.determinant[c]);
        acc += a.coefficient * b.coefficient * block.determinant();
      }
    g[j] = acc;
    double p = 1.0;
    for (int k = 0; k <= n; ++k, p *= z) vander(j, k) = p;
  }
  const Vector coeffs = vander.colPivHouseholderQr().solve(g);
  OccupancyDistribution out;
  out.probabilities.assign(coeffs.data(), coeffs.data() + coeffs.size());
  return out;
}

inline OccupancyDistribution occupancy(const CIState& state, const RegionOverlap& overlap) { return occupancy(state, overlap.matrix); }

// ---------------------------------------------------------------------------
// brute force

struct BruteForceOptions {
  double tol{1e-8};                      // 3-D rule tolerance on Gram / restricted overlaps
  QuadratureOptions quadrature{};
  double evaluation_cap{2e10};           // max pointwise evaluations of Psi per call
};

/// Ball outside of which every primitive's squared mass is below tol/10.
inline Ball effective_support(const OrbitalSet& set, double tol) {
  Vec3 c = Vec3::Zero();
  double alpha_min = std::numeric_limits<double>::infinity();
  for (const auto& g : set.primitives()) {
    c += g.center;
    alpha_min = std::min(alpha_min, g.exponent);
  }
  c /= static_cast<double>(set.primitives().size());
  double spread = 0.0;
  for (const auto& g : set.primitives()) spread = std::max(spread, (g.center - c).norm());
  // tail of a normalized density ~ exp(-beta r^2) beyond rho
  const double beta = 2.0 * alpha_min;
  const auto tail = [&](double rho) {
    const double s = std::sqrt(beta) * rho;
    return std::erfc(s) + 2.0 * s / std::sqrt(kPi) * std::exp(-s * s);
  };
  double rho = 1.0 / std::sqrt(beta);
  while (tail(rho) > tol / 10.0) rho *= 1.05;
  return Ball{c, spread + rho};
}

namespace detail {

/// Fixed rules and orbital tables for the brute-force integrals.
struct ProductGrid {
  QuadratureRule omega;
  QuadratureRule whole;
  Matrix phi_omega;
  Matrix phi_whole;
};

/// Laplace expansion of each determinant along the first coordinate: returns v with
/// Psi(x_1, trailing) = sum_p phi_p(x_1) v_p.
inline Vector cofactor_vector(const CIState& state, const std::vector<const double*>& trailing, int n_orb) {
  const int n = state.electrons();
  Vector v = Vector::Zero(n_orb);
  const double norm = 1.0 / std::sqrt(factorial(n));
  for (const auto& t : state.terms()) {
    const auto& o = t.determinant.indices();
    const double c = t.coefficient * norm;
    if (n == 1) {
      v[o[0]] += c;
    } else if (n == 2) {
      v[o[0]] += c * trailing[0][o[1]];
      v[o[1]] -= c * trailing[0][o[0]];
    } else {
      // n == 3: minors over rows o_{!=r}, columns (x_2, x_3)
      const double* b = trailing[0];
      const double* d = trailing[1];
      v[o[0]] += c * (b[o[1]] * d[o[2]] - b[o[2]] * d[o[1]]);
      v[o[1]] -= c * (b[o[0]] * d[o[2]] - b[o[2]] * d[o[0]]);
      v[o[2]] += c * (b[o[0]] * d[o[1]] - b[o[1]] * d[o[0]]);
    }
  }
  return v;
}

/// J_k = int over Omega^k x W^{N-k} of |Psi|^2, W = effective-support ball.
inline double restricted_mass(const CIState& state, const ProductGrid& grid, int k, double evaluation_cap) {
  const int n = state.electrons();
  const int n_orb = state.orbitals().size();
  const auto rule_of = [&](int coord) -> const QuadratureRule& { return coord < k ? grid.omega : grid.whole; };
  const auto phi_of = [&](int coord) -> const Matrix& { return coord < k ? grid.phi_omega : grid.phi_whole; };
  double evaluations = static_cast<double>(rule_of(0).size());
  for (int c = 1; c < n; ++c) evaluations *= static_cast<double>(rule_of(c).size());
  if (evaluations > evaluation_cap)
    throw QuadratureCapExceeded("brute-force evaluation count " + format_number(evaluations) + " exceeds cap");

  // row-major copies so each point's orbital values are contiguous
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<RowMatrix> tables;
  for (int c = 0; c < n; ++c) tables.emplace_back(phi_of(c));
  const Matrix& inner_phi = phi_of(0);
  const auto& inner_w = rule_of(0).weights;

  const auto inner_sum = [&](const Vector& v) {
    const Vector psi = inner_phi * v;
    double s = 0.0;
    for (Eigen::Index a = 0; a < psi.size(); ++a) s += inner_w[a] * psi[a] * psi[a];
    return s;
  };

  if (n == 1) return inner_sum(cofactor_vector(state, {}, n_orb));

  const std::size_t outer = rule_of(1).size();
  constexpr std::size_t kChunk = 32;
  const std::size_t chunks = (outer + kChunk - 1) / kChunk;
  const auto partial = parallel_map(chunks, [&](std::size_t ch) {
    double acc = 0.0;
    std::vector<const double*> trailing(n - 1);
    for (std::size_t b = ch * kChunk; b < std::min(outer, (ch + 1) * kChunk); ++b) {
      trailing[0] = tables[1].row(static_cast<Eigen::Index>(b)).data();
      const double wb = rule_of(1).weights[b];
      if (n == 2) {
        acc += wb * inner_sum(cofactor_vector(state, trailing, n_orb));
      } else {
        double acc_c = 0.0;
        for (std::size_t c = 0; c < rule_of(2).size(); ++c) {
          trailing[1] = tables[2].row(static_cast<Eigen::Index>(c)).data();
          acc_c += rule_of(2).weights[c] * inner_sum(cofactor_vector(state, trailing, n_orb));
        }
        acc += wb * acc_c;
      }
    }
    return acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

inline ProductGrid product_grid(const CIState& state, const std::optional<Region>& region, const BruteForceOptions& opts) {
  if (state.electrons() > 3) throw InvalidArgument("brute-force densities support N <= 3");
  const auto& set = state.orbitals();
  ProductGrid g;
  const Region support(effective_support(set, opts.tol));
  g.whole = overlap_rule(set, support, opts.tol, opts.quadrature);
  g.phi_whole = set.evaluate(g.whole.nodes);
  if (region) {
    g.omega = overlap_rule(set, *region, opts.tol, opts.quadrature);
    g.phi_omega = set.evaluate(g.omega.nodes);
  } else {
    g.omega = g.whole;
    g.phi_omega = g.phi_whole;
  }
  return g;
}

}  // namespace detail

struct BruteForceResult {
  DensityFunctionals functionals;
  OccupancyDistribution occupancy;
  std::vector<double> masses;  // J_k, k = 0..N
};

namespace detail {

inline OccupancyDistribution occupancy_from_masses(const std::vector<double>& j) {
  const int n = static_cast<int>(j.size()) - 1;
  OccupancyDistribution out;
  out.probabilities.assign(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int m = 0; m <= n - k; ++m) s += ((m % 2) ? -1.0 : 1.0) * binomial(n - k, m) * j[k + m];
    out.probabilities[k] = binomial(n, k) * s;
  }
  return out;
}

}  // namespace detail

/// Everything from the defining integrals: J_k over Omega^k x W^{N-k}, P = J_1, Q = J_2, and
/// P^k = C(N,k) int over Omega^k x (Omega^c)^{N-k}, each complement factor expanded as (W - Omega).
inline BruteForceResult bruteforce(const CIState& state, const Region& region, const BruteForceOptions& opts = {}) {
  require_normalized(state, "bruteforce");
  const auto grid = detail::product_grid(state, region, opts);
  const int n = state.electrons();
  BruteForceResult out;
  out.masses.resize(n + 1);
  for (int k = 0; k <= n; ++k) out.masses[k] = detail::restricted_mass(state, grid, k, opts.evaluation_cap);
  out.functionals = detail::assemble(n, out.masses[1], n >= 2 ? std::optional<double>(out.masses[2]) : std::nullopt);
  out.occupancy = detail::occupancy_from_masses(out.masses);
  return out;
}

/// P and Q from the defining integrals over Omega x R^{3(N-1)} and Omega^2 x R^{3(N-2)}.
inline DensityFunctionals bruteforce_functionals(const CIState& state, const Region& region, const BruteForceOptions& opts = {}) {
  require_normalized(state, "bruteforce_functionals");
  const auto grid = detail::product_grid(state, region, opts);
  const int n = state.electrons();
  const double p = detail::restricted_mass(state, grid, 1, opts.evaluation_cap);
  std::optional<double> q;
  if (n >= 2) q = detail::restricted_mass(state, grid, 2, opts.evaluation_cap);
  return detail::assemble(n, p, q);
}

inline DensityFunctionals bruteforce_functionals(const CIState& state, WholeSpace, const BruteForceOptions& opts = {}) {
  require_normalized(state, "bruteforce_functionals");
  const auto grid = detail::product_grid(state, std::nullopt, opts);
  const double mass = detail::restricted_mass(state, grid, 0, opts.evaluation_cap);
  return detail::assemble(state.electrons(), mass, state.electrons() >= 2 ? std::optional<double>(mass) : std::nullopt);
}

inline OccupancyDistribution occupancy_bruteforce(const CIState& state, const Region& region, const BruteForceOptions& opts = {}) {
  return bruteforce(state, region, opts).occupancy;
}

}  // namespace rhobound
