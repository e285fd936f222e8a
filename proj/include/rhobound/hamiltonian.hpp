#pragma once

// N-electron energy <Psi, H Psi> with H = sum_i (-Laplacian_i - sum_l Z_l/|x_i - R_l|)
// + sum_{i<j} 1/|x_i - x_j|, nuclear repulsion, and Hellmann-Feynman forces.

#include <cmath>
#include <string>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/geometry.hpp"
#include "rhobound/orbitals.hpp"
#include "rhobound/parallel.hpp"
#include "rhobound/wavefunctions.hpp"

namespace rhobound {

struct EnergyBreakdown {
  double kinetic{0.0};
  double attraction{0.0};  // <= 0 as it enters H
  double repulsion{0.0};
  double total{0.0};
};

inline EnergyBreakdown energy(const CIState& state, const NuclearFrame& frame) {
  require_normalized(state, "energy");
  const auto& set = state.orbitals();
  const Matrix d = one_rdm(state);
  EnergyBreakdown e;
  e.kinetic = (d.cwiseProduct(set.kinetic_matrix())).sum();
  e.attraction = -(d.cwiseProduct(set.attraction_matrix(frame))).sum();
  if (state.electrons() >= 2) e.repulsion = two_body_expectation(state, set.eri());
  e.total = e.kinetic + e.attraction + e.repulsion;
  return e;
}

/// <Psi, H Psi> for a normalized state.
inline double rayleigh_quotient(const CIState& state, const NuclearFrame& frame) { return energy(state, frame).total; }

/// sum_{l<m} Z_l Z_m / |R_l - R_m|
inline double nuclear_repulsion(const NuclearFrame& frame) {
  const auto& nuc = frame.nuclei();
  double s = 0.0;
  for (std::size_t l = 0; l < nuc.size(); ++l)
    for (std::size_t m = l + 1; m < nuc.size(); ++m) {
      const double r = (nuc[l].position - nuc[m].position).norm();
      if (r == 0.0) throw InvalidArgument("nuclear repulsion undefined for coincident nuclei");
      s += nuc[l].charge * nuc[m].charge / r;
    }
  return s;
}

struct ForceReport {
  std::vector<Vec3> electronic;  // <Psi, (grad_{R_l} W) Psi>
  std::vector<Vec3> nuclear;     // sum_{m != l} Z_l Z_m (R_m - R_l) / |R_m - R_l|^3
  std::vector<Vec3> total;       // grad_{R_l} U
  double equilibrium_residual{0.0};
};

/// <Psi, W Psi> with W = -q sum_i |x_i - C|^-1, for the fixed orbital basis of the state.
inline double attraction_expectation(const CIState& state, const Vec3& position, double charge) {
  const PointCharge pc{position, charge};
  const Matrix v = state.orbitals().attraction_matrix(std::span<const PointCharge>(&pc, 1));
  return -(one_rdm(state).cwiseProduct(v)).sum();
}

inline ForceReport hf_force(const CIState& state, const NuclearFrame& frame) {
  require_normalized(state, "hf_force");
  const auto& nuc = frame.nuclei();
  for (std::size_t l = 0; l < nuc.size(); ++l)
    for (std::size_t m = l + 1; m < nuc.size(); ++m)
      if ((nuc[l].position - nuc[m].position).norm() == 0.0) throw InvalidArgument("forces undefined for coincident nuclei");
  const Matrix d = one_rdm(state);
  ForceReport f;
  for (std::size_t l = 0; l < nuc.size(); ++l) {
    const auto grads = state.orbitals().attraction_gradient_matrices(nuc[l].position);
    Vec3 el;
    for (int k = 0; k < 3; ++k) el[k] = -nuc[l].charge * (d.cwiseProduct(grads[k])).sum();
    Vec3 nr = Vec3::Zero();
    for (std::size_t m = 0; m < nuc.size(); ++m) {
      if (m == l) continue;
      const Vec3 r = nuc[m].position - nuc[l].position;
      nr += nuc[l].charge * nuc[m].charge * r / std::pow(r.norm(), 3);
    }
    f.electronic.push_back(el);
    f.nuclear.push_back(nr);
    f.total.push_back(el + nr);
    f.equilibrium_residual = std::max(f.equilibrium_residual, (el + nr).norm());
  }
  return f;
}

/// Central differences of <Psi, W_l Psi> in R_l (basis held fixed).
inline std::vector<Vec3> hf_force_finite_difference(const CIState& state, const NuclearFrame& frame, double step = 1e-4) {
  std::vector<Vec3> out;
  for (const auto& n : frame.nuclei()) {
    Vec3 g;
    for (int k = 0; k < 3; ++k) {
      Vec3 dp = n.position, dm = n.position;
      dp[k] += step;
      dm[k] -= step;
      g[k] = (attraction_expectation(state, dp, n.charge) - attraction_expectation(state, dm, n.charge)) / (2 * step);
    }
    out.push_back(g);
  }
  return out;
}

inline double equilibrium_residual(const CIState& state, const NuclearFrame& frame) {
  return hf_force(state, frame).equilibrium_residual;
}

// ---------------------------------------------------------------------------
// Coulomb repulsion restricted to Omega x Omega

struct RestrictedRepulsionOptions {
  double outer_tol{1e-7};
  int inner_polar{16};
  int inner_radial{12};
  QuadratureOptions quadrature{};
};

struct RestrictedRepulsion {
  double value{0.0};           // <Psi, sum_{i<j} chi(x_i) chi(x_j) / |x_i - x_j| Psi>
  double error_estimate{0.0};  // |fine - coarse| over the inner singular rule
  EriTensor eri;               // (pq|rs) restricted to Omega x Omega
};

namespace detail {

/// (pq|rs)_Omega. The inner integral over x is taken in spherical coordinates centered at
/// each outer node y, so the Jacobian cancels the 1/|x - y| singularity; rays are clipped to
/// the region exactly.
inline EriTensor restricted_eri(const OrbitalSet& set, const Region& region, const QuadratureRule& outer,
                                int polar, int radial) {
  const int n = set.size();
  const auto gt = gauss_legendre(polar);
  const int azimuth = 2 * polar;
  const auto gr = gauss_legendre(radial);
  std::vector<Vec3> dirs;
  std::vector<double> dir_w;
  for (int j = 0; j < polar; ++j) {
    const double ct = gt.nodes[j], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int k = 0; k < azimuth; ++k) {
      const double phi = 2.0 * kPi * (k + 0.5) / azimuth;
      dirs.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      dir_w.push_back(gt.weights[j] * 2.0 * kPi / azimuth);
    }
  }
  const Matrix phi_outer = set.evaluate(outer.nodes);
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (outer.size() + kChunk - 1) / kChunk;
  const auto partial = parallel_map(chunks, [&](std::size_t c) {
    Matrix acc = Matrix::Zero(n * n, n * n);
    std::vector<Vec3> pts;
    std::vector<double> wts;
    for (std::size_t y = c * kChunk; y < std::min(outer.size(), (c + 1) * kChunk); ++y) {
      pts.clear();
      wts.clear();
      const Vec3& origin = outer.nodes[y];
      for (std::size_t d = 0; d < dirs.size(); ++d)
        for (const auto& iv : ray_intervals(region, origin, dirs[d])) {
          const double half = 0.5 * (iv.hi - iv.lo), mid = 0.5 * (iv.hi + iv.lo);
          for (int i = 0; i < radial; ++i) {
            const double rho = mid + half * gr.nodes[i];
            pts.push_back(origin + rho * dirs[d]);
            wts.push_back(dir_w[d] * gr.weights[i] * half * rho);
          }
        }
      const Matrix phi = set.evaluate(pts);
      const Eigen::Map<const Vector> w(wts.data(), static_cast<Eigen::Index>(wts.size()));
      const Matrix u = phi.transpose() * w.asDiagonal() * phi;  // U_pq(y)
      const Vector py = phi_outer.row(static_cast<Eigen::Index>(y)).transpose();
      const Matrix rs = py * py.transpose();
      acc.noalias() += outer.weights[y] * Eigen::Map<const Vector>(u.data(), u.size()) *
                       Eigen::Map<const Vector>(rs.data(), rs.size()).transpose();
    }
    return acc;
  });
  Matrix total = Matrix::Zero(n * n, n * n);
  for (const auto& p : partial) total += p;
  total = 0.5 * (total + total.transpose());
  EriTensor eri(n);
  // column-major flattening: u index = p + n q
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) eri(p, q, r, s) = total(p + n * q, r + n * s);
  return eri;
}

}  // namespace detail

inline RestrictedRepulsion restricted_repulsion(const CIState& state, const Region& region,
                                                const RestrictedRepulsionOptions& opts = {}) {
  require_normalized(state, "restricted_repulsion");
  RestrictedRepulsion out;
  if (state.electrons() < 2) {
    out.eri = EriTensor(state.orbitals().size());
    return out;
  }
  const auto outer = overlap_rule(state.orbitals(), region, opts.outer_tol, opts.quadrature);
  out.eri = detail::restricted_eri(state.orbitals(), region, outer, opts.inner_polar, opts.inner_radial);
  out.value = two_body_expectation(state, out.eri);
  const auto coarse = detail::restricted_eri(state.orbitals(), region, outer, std::max(4, 2 * opts.inner_polar / 3),
                                             std::max(4, 2 * opts.inner_radial / 3));
  out.error_estimate = std::abs(two_body_expectation(state, coarse) - out.value);
  return out;
}

}  // namespace rhobound
