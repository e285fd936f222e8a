#pragma once

// Antisymmetric N-electron states over a shared orthonormal orbital set: determinants
// psi_{i1} ^ ... ^ psi_{iN} (indices strictly increasing), their real linear combinations,
// and Slater-Condon matrix elements.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/orbitals.hpp"

namespace rhobound {

class Determinant {
 public:
  explicit Determinant(std::vector<int> indices) : indices_(std::move(indices)) {
    if (indices_.empty()) throw InvalidArgument("determinant needs at least one orbital");
    if (indices_.front() < 0) throw InvalidArgument("orbital indices must be non-negative");
    for (std::size_t i = 1; i < indices_.size(); ++i)
      if (indices_[i] <= indices_[i - 1]) throw InvalidArgument("determinant indices must be strictly increasing");
  }

  /// Sorts an arbitrary index list into canonical order; returns the permutation parity in `sign`.
  static Determinant from_unsorted(std::vector<int> indices, int& sign) {
    sign = 1;
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (std::size_t j = 0; j + 1 < indices.size() - i; ++j)
        if (indices[j] > indices[j + 1]) {
          std::swap(indices[j], indices[j + 1]);
          sign = -sign;
        }
    return Determinant(std::move(indices));
  }

  int electrons() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  int operator[](std::size_t i) const { return indices_[i]; }

  friend bool operator==(const Determinant&, const Determinant&) = default;
  friend auto operator<=>(const Determinant&, const Determinant&) = default;

 private:
  std::vector<int> indices_;
};

/// Difference between two determinants of equal length. holes are in d1 only, particles in
/// d2 only, both ascending; sign is the parity of the maximum-coincidence alignment.
struct Excitation {
  int degree{0};
  std::array<int, 2> holes{};
  std::array<int, 2> particles{};
  int sign{1};
};

inline Excitation excitation(const Determinant& d1, const Determinant& d2) {
  if (d1.electrons() != d2.electrons()) throw InvalidArgument("determinants differ in electron count");
  Excitation ex;
  const auto& a = d1.indices();
  const auto& b = d2.indices();
  std::vector<int> hole_pos, part_pos;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i] < b[j])) {
      hole_pos.push_back(static_cast<int>(i++));
    } else if (i == a.size() || b[j] < a[i]) {
      part_pos.push_back(static_cast<int>(j++));
    } else {
      ++i;
      ++j;
    }
  }
  ex.degree = static_cast<int>(hole_pos.size());
  if (ex.degree > 2) return ex;
  int parity = 0;
  for (int k = 0; k < ex.degree; ++k) {
    ex.holes[k] = a[hole_pos[k]];
    ex.particles[k] = b[part_pos[k]];
    parity += hole_pos[k] + part_pos[k];
  }
  ex.sign = (parity % 2 == 0) ? 1 : -1;
  return ex;
}

/// <Phi_d1 | sum_i o(x_i) | Phi_d2> for a symmetric one-body matrix over orbital indices.
inline double one_body_element(const Determinant& d1, const Determinant& d2, const Matrix& op) {
  const auto ex = excitation(d1, d2);
  const auto check = [&](const Determinant& d) {
    if (d.indices().back() >= op.rows()) throw InvalidArgument("one-body operator smaller than orbital index range");
  };
  check(d1);
  check(d2);
  if (ex.degree == 0) {
    double s = 0.0;
    for (int k : d1.indices()) s += op(k, k);
    return s;
  }
  if (ex.degree == 1) return ex.sign * op(ex.holes[0], ex.particles[0]);
  return 0.0;
}

/// <Phi_d1 | sum_{i<j} g(x_i, x_j) | Phi_d2> with physicist-notation kernel <pq|rs> = kernel(p, q, r, s).
template <class Kernel>
  requires std::invocable<Kernel&, int, int, int, int>
double two_body_element(const Determinant& d1, const Determinant& d2, Kernel&& kernel) {
  const auto ex = excitation(d1, d2);
  const auto anti = [&](int p, int q, int r, int s) { return kernel(p, q, r, s) - kernel(p, q, s, r); };
  if (ex.degree == 0) {
    double s = 0.0;
    const auto& idx = d1.indices();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i + 1; j < idx.size(); ++j) s += anti(idx[i], idx[j], idx[i], idx[j]);
    return s;
  }
  if (ex.degree == 1) {
    const int p = ex.holes[0], q = ex.particles[0];
    double s = 0.0;
    for (int k : d1.indices())
      if (k != p) s += anti(p, k, q, k);
    return ex.sign * s;
  }
  if (ex.degree == 2) return ex.sign * anti(ex.holes[0], ex.holes[1], ex.particles[0], ex.particles[1]);
  return 0.0;
}

/// Factorized kernel a(x) a(y) with <pq|rs> = A_pr A_qs.
inline double two_body_element(const Determinant& d1, const Determinant& d2, const Matrix& a) {
  const int top = std::max(d1.indices().back(), d2.indices().back());
  if (top >= a.rows()) throw InvalidArgument("two-body operator smaller than orbital index range");
  return two_body_element(d1, d2, [&](int p, int q, int r, int s) { return a(p, r) * a(q, s); });
}

/// Coulomb kernel from a chemist-notation tensor: <pq|rs> = (pr|qs).
inline double two_body_element(const Determinant& d1, const Determinant& d2, const EriTensor& eri) {
  return two_body_element(d1, d2, [&](int p, int q, int r, int s) { return eri(p, r, q, s); });
}

struct CITerm {
  double coefficient;
  Determinant determinant;
};

class CIState {
 public:
  CIState(std::shared_ptr<const OrbitalSet> orbitals, std::vector<CITerm> terms)
      : orbitals_(std::move(orbitals)), terms_(std::move(terms)) {
    if (!orbitals_) throw InvalidArgument("CI state needs an orbital set");
    if (!orbitals_->orthonormal()) throw InvalidArgument("CI state requires an orthonormal orbital set");
    if (terms_.empty()) throw InvalidArgument("CI state needs at least one determinant");
    electrons_ = terms_.front().determinant.electrons();
    std::set<Determinant> seen;
    for (const auto& t : terms_) {
      if (t.determinant.electrons() != electrons_) throw InvalidArgument("all determinants must share N");
      if (t.determinant.indices().back() >= orbitals_->size()) throw InvalidArgument("determinant index outside orbital set");
      if (!std::isfinite(t.coefficient)) throw InvalidArgument("CI coefficient must be finite");
      if (!seen.insert(t.determinant).second) throw InvalidArgument("determinants in a CI state must be distinct");
    }
  }

  static CIState single(std::shared_ptr<const OrbitalSet> orbitals, std::vector<int> indices) {
    return CIState(std::move(orbitals), {CITerm{1.0, Determinant(std::move(indices))}});
  }

  int electrons() const { return electrons_; }
  const OrbitalSet& orbitals() const { return *orbitals_; }
  const std::shared_ptr<const OrbitalSet>& orbitals_ptr() const { return orbitals_; }
  const std::vector<CITerm>& terms() const { return terms_; }
  bool is_single_determinant() const { return terms_.size() == 1; }

  double norm() const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.coefficient * t.coefficient;
    return std::sqrt(s);
  }

  CIState with_orbitals(std::shared_ptr<const OrbitalSet> orbitals) const { return CIState(std::move(orbitals), terms_); }

 private:
  std::shared_ptr<const OrbitalSet> orbitals_;
  std::vector<CITerm> terms_;
  int electrons_{0};
};

inline CIState normalize(const CIState& state) {
  const double n = state.norm();
  if (!(n > 0)) throw InvalidArgument("cannot normalize the zero state");
  auto terms = state.terms();
  for (auto& t : terms) t.coefficient /= n;
  return CIState(state.orbitals_ptr(), std::move(terms));
}

inline void require_normalized(const CIState& state, const char* what) {
  if (std::abs(state.norm() - 1.0) > 1e-10) throw InvalidArgument(std::string(what) + ": state must be normalized");
}

/// sum_{m,n} c_m c_n f(D_m, D_n)
template <class F>
double expectation(const CIState& state, F&& element) {
  const auto& t = state.terms();
  double s = 0.0;
  for (std::size_t m = 0; m < t.size(); ++m) {
    s += t[m].coefficient * t[m].coefficient * element(t[m].determinant, t[m].determinant);
    for (std::size_t n = m + 1; n < t.size(); ++n)
      s += 2.0 * t[m].coefficient * t[n].coefficient * element(t[m].determinant, t[n].determinant);
  }
  return s;
}

inline double one_body_expectation(const CIState& state, const Matrix& op) {
  return expectation(state, [&](const Determinant& a, const Determinant& b) { return one_body_element(a, b, op); });
}

inline double two_body_expectation(const CIState& state, const EriTensor& eri) {
  return expectation(state, [&](const Determinant& a, const Determinant& b) { return two_body_element(a, b, eri); });
}

/// One-particle density matrix D with <Psi| sum_i o(x_i) |Psi> = tr(D o).
inline Matrix one_rdm(const CIState& state) {
  const int n = state.orbitals().size();
  Matrix d = Matrix::Zero(n, n);
  const auto& t = state.terms();
  for (std::size_t m = 0; m < t.size(); ++m)
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto ex = excitation(t[m].determinant, t[k].determinant);
      const double c = t[m].coefficient * t[k].coefficient;
      if (ex.degree == 0) {
        for (int i : t[m].determinant.indices()) d(i, i) += c;
      } else if (ex.degree == 1) {
        d(ex.holes[0], ex.particles[0]) += c * ex.sign;
      }
    }
  return 0.5 * (d + d.transpose());
}

/// Pointwise value of a determinant from the orbital values phi(point, orbital):
/// det[psi_{o_r}(x_c)] / sqrt(N!).
inline double determinant_value(const Determinant& det, std::span<const Vector> orbital_values) {
  const int n = det.electrons();
  if (static_cast<int>(orbital_values.size()) != n) throw InvalidArgument("need one point per electron");
  Matrix a(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a(r, c) = orbital_values[c][det[r]];
  return a.determinant() / std::sqrt(factorial(n));
}

/// Psi(x_1, ..., x_N) evaluated directly from the determinant expansion.
inline double evaluate(const CIState& state, std::span<const Vec3> points) {
  const Matrix phi = state.orbitals().evaluate(points);
  std::vector<Vector> rows;
  for (Eigen::Index i = 0; i < phi.rows(); ++i) rows.emplace_back(phi.row(i).transpose());
  double v = 0.0;
  for (const auto& t : state.terms()) v += t.coefficient * determinant_value(t.determinant, rows);
  return v;
}

/// All C(n, N) determinants over n orbitals in lexicographic order.
inline std::vector<Determinant> all_determinants(int orbitals, int electrons) {
  if (electrons < 1 || electrons > orbitals) throw InvalidArgument("need 1 <= N <= orbital count");
  std::vector<Determinant> out;
  std::vector<int> idx(electrons);
  for (int i = 0; i < electrons; ++i) idx[i] = i;
  for (;;) {
    out.emplace_back(idx);
    int k = electrons - 1;
    while (k >= 0 && idx[k] == orbitals - electrons + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < electrons; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace rhobound
