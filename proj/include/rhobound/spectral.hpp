#pragma once

// Variational estimates of inf sigma(h), h = -Laplacian - sum_l Z_l/|x - R_l|, and the
// dilation identity U(s)^-1 h U(s) = s^2 (-Laplacian - s^-1 sum_l Z_l/|x - s R_l|)
// with (U(s) f)(x) = s^{3/2} f(s x).

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rhobound/bounds.hpp"
#include "rhobound/core.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/orbitals.hpp"

namespace rhobound {

struct SpectralEstimate {
  double ground_estimate{0.0};
  std::string basis_descriptor;
  std::optional<double> residual_gap;  // change from the previous ladder rung
};

struct RitzSolution {
  Vector eigenvalues;  // ascending
  OrbitalSet eigenorbitals;  // orthonormal, column k belongs to eigenvalues[k]
};

inline Matrix one_electron_matrix(const OrbitalSet& basis, const NuclearFrame& frame) {
  return basis.kinetic_matrix() - basis.attraction_matrix(frame);
}

/// Generalized problem H c = e S c by Loewdin reduction.
inline RitzSolution ritz_solve(const NuclearFrame& frame, const OrbitalSet& basis, const OrthonormalizeOptions& opts = {}) {
  const OrbitalSet ortho = orthonormalize(basis, opts);
  Matrix h = one_electron_matrix(ortho, frame);
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericFailure("symmetric eigensolver failed");
  Matrix c = ortho.coefficients() * eig.eigenvectors();
  return RitzSolution{eig.eigenvalues(), OrbitalSet(ortho.primitives(), std::move(c), true)};
}

inline std::string describe(const OrbitalSet& basis) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& g : basis.primitives()) {
    lo = std::min(lo, g.exponent);
    hi = std::max(hi, g.exponent);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d functions, exponents [%.4g, %.4g]", basis.size(), lo, hi);
  return buf;
}

inline SpectralEstimate rayleigh_ritz(const NuclearFrame& frame, const OrbitalSet& basis) {
  const auto sol = ritz_solve(frame, basis);
  return SpectralEstimate{sol.eigenvalues[0], describe(basis), std::nullopt};
}

/// Lowest `count` eigenorbitals of h in the span of `basis`.
inline OrbitalSet eigenorbitals(const NuclearFrame& frame, const OrbitalSet& basis, int count) {
  if (count < 1 || count > basis.size()) throw InvalidArgument("eigenorbital count out of range");
  const auto sol = ritz_solve(frame, basis);
  return OrbitalSet(sol.eigenorbitals.primitives(), sol.eigenorbitals.coefficients().leftCols(count), true);
}

/// U(s) applied to every function: exponents x s^2, centers / s, coefficients x s^{3/2}.
inline OrbitalSet dilate(const OrbitalSet& basis, double s) {
  if (!(s > 0)) throw InvalidArgument("dilation factor must be positive");
  std::vector<GaussianPrimitive> prims = basis.primitives();
  for (auto& g : prims) {
    g.exponent *= s * s;
    g.center /= s;
  }
  return OrbitalSet(std::move(prims), basis.coefficients() * std::pow(s, 1.5), basis.orthonormal());
}

/// Elementwise comparison of <U f_i, h U f_j> with s^2 <f_i, (-Laplacian - s^-1 sum Z/|x - sR|) f_j>.
inline BoundReport dilation_check(const NuclearFrame& frame, const OrbitalSet& basis, double s, double tol = 1e-10) {
  const OrbitalSet dilated = dilate(basis, s);
  const Matrix lhs = one_electron_matrix(dilated, frame);
  std::vector<PointCharge> scaled;
  for (const auto& n : frame.nuclei()) scaled.push_back({s * n.position, n.charge / s});
  const Matrix rhs = s * s * (basis.kinetic_matrix() - basis.attraction_matrix(scaled));
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double diff = (lhs - rhs).cwiseAbs().maxCoeff();
  return make_report("dilation", diff, tol * scale, 0.0, "s=" + format_number(s));
}

struct LadderOptions {
  std::vector<int> sizes{4, 6, 8, 10};
  double alpha0{1e-3};
  double beta{3.0};
};

/// Even-tempered sets centered at every distinct nucleus position, one set per size.
inline std::vector<OrbitalSet> even_tempered_ladder(const NuclearFrame& frame, const LadderOptions& opts = {}) {
  std::vector<Vec3> centers;
  for (const auto& n : frame.nuclei()) {
    bool seen = false;
    for (const auto& c : centers) seen = seen || (c - n.position).norm() == 0.0;
    if (!seen) centers.push_back(n.position);
  }
  std::vector<OrbitalSet> ladder;
  for (int size : opts.sizes) {
    std::vector<Orbital> fns;
    for (const auto& c : centers) {
      const auto part = even_tempered(EvenTemperedSpec{size, opts.alpha0, opts.beta, c});
      fns.insert(fns.end(), part.begin(), part.end());
    }
    ladder.emplace_back(fns);
  }
  return ladder;
}

struct AuditReport {
  std::vector<SpectralEstimate> rungs;
  std::vector<BoundReport> checks;  // bound <= estimate per rung, then monotonicity per step
  double bound{0.0};
  std::string bound_kind;  // "lemma22" or "coincident"

  bool satisfied() const {
    for (const auto& c : checks)
      if (!c.satisfied) return false;
    return true;
  }
};

/// Compares the analytic lower bound with every variational estimate of the ladder. Frames
/// whose nuclei share one point use the exact value -(sum Z)^2/4 instead.
inline AuditReport lower_bound_audit(const NuclearFrame& frame, const std::vector<OrbitalSet>& ladder) {
  if (ladder.empty()) throw InvalidArgument("basis ladder is empty");
  AuditReport out;
  const bool coincident = frame.all_coincident() && (frame.size() >= 2 || !frame.separation_floor());
  out.bound = coincident ? coincident_nuclei_value(frame) : lemma22_constant(frame);
  out.bound_kind = coincident ? "coincident" : "lemma22";
  for (const auto& basis : ladder) {
    auto est = rayleigh_ritz(frame, basis);
    if (!out.rungs.empty()) est.residual_gap = out.rungs.back().ground_estimate - est.ground_estimate;
    out.rungs.push_back(est);
  }
  for (const auto& r : out.rungs)
    out.checks.push_back(make_report("lemma22-audit", out.bound, r.ground_estimate, 1e-9, out.bound_kind + "; " + r.basis_descriptor));
  for (std::size_t k = 1; k < out.rungs.size(); ++k)
    out.checks.push_back(make_report("lemma22-audit:monotone", out.rungs[k].ground_estimate, out.rungs[k - 1].ground_estimate, 1e-12,
                                     "rung " + std::to_string(k)));
  return out;
}

}  // namespace rhobound
