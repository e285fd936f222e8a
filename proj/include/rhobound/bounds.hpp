#pragma once

// Closed-form bound evaluators and the checkers that compare them with computed quantities.
// Every checker reports lhs <= rhs; hypothesis failures are "not applicable", never "violated".

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/densities.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/geometry.hpp"
#include "rhobound/hamiltonian.hpp"
#include "rhobound/orbitals.hpp"
#include "rhobound/wavefunctions.hpp"

namespace rhobound {

struct BoundReport {
  std::string check;
  double lhs{0.0};
  double rhs{0.0};
  double margin{0.0};  // rhs - lhs
  double tolerance{0.0};
  bool satisfied{true};
  bool applicable{true};
  std::string context;
};

inline BoundReport make_report(std::string check, double lhs, double rhs, double tol, std::string context = {}) {
  BoundReport r;
  r.check = std::move(check);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.tolerance = tol;
  r.satisfied = lhs <= rhs + tol;
  r.context = std::move(context);
  return r;
}

inline BoundReport not_applicable(std::string check, std::string reason) {
  BoundReport r;
  r.check = std::move(check);
  r.applicable = false;
  r.satisfied = true;
  r.margin = 0.0;
  r.context = std::move(reason);
  return r;
}

/// Default checker tolerance from an estimated absolute quadrature error.
inline double checker_tolerance(double quadrature_error) { return std::max(1e-9, 10.0 * quadrature_error); }

namespace detail {

inline double require_floor(const NuclearFrame& frame, const char* what) {
  if (!frame.separation_floor()) throw InvalidArgument(std::string(what) + ": separation floor a is required");
  return *frame.separation_floor();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// closed forms

/// N (4d/(N-1) {(8 sqrt2 + 6 L^{2/3}) Z/a + Z^2} + 1/(4N^2))^{1/2} + 1/2
inline double theorem_rhs(int electrons, int nuclei, double max_charge, double a, double d_omega) {
  if (electrons < 2) throw InvalidArgument("theorem bound needs N >= 2");
  if (nuclei < 1) throw InvalidArgument("need at least one nucleus");
  if (!(a > 0)) throw InvalidArgument("separation floor must be positive");
  if (!(d_omega > 0)) throw InvalidArgument("region diameter must be positive");
  const double n = electrons;
  const double brace = (8.0 * std::sqrt(2.0) + 6.0 * std::cbrt(double(nuclei) * nuclei)) * max_charge / a + max_charge * max_charge;
  return n * std::sqrt(4.0 * d_omega / (n - 1.0) * brace + 1.0 / (4.0 * n * n)) + 0.5;
}

inline double theorem_rhs(int electrons, const NuclearFrame& frame, double d_omega) {
  return theorem_rhs(electrons, frame.size(), frame.max_charge(), detail::require_floor(frame, "theorem_rhs"), d_omega);
}

/// -(16 sqrt2 + 12 L^{2/3}) Z/a - 2 Z^2
inline double lemma22_constant(int nuclei, double max_charge, double a) {
  if (!(a > 0)) throw InvalidArgument("separation floor must be positive");
  return -(16.0 * std::sqrt(2.0) + 12.0 * std::cbrt(double(nuclei) * nuclei)) * max_charge / a - 2.0 * max_charge * max_charge;
}

inline double lemma22_constant(const NuclearFrame& frame) {
  return lemma22_constant(frame.size(), frame.max_charge(), detail::require_floor(frame, "lemma22_constant"));
}

/// a -> infinity limit of the lemma's formula for a single nucleus: -2 Z^2.
inline double lemma22_single_nucleus_limit(double charge) { return -2.0 * charge * charge; }

/// inf sigma(h) = -(sum Z)^2 / 4 when all nuclei sit at one point.
inline double coincident_nuclei_value(const NuclearFrame& frame) {
  if (!frame.all_coincident()) throw InvalidArgument("coincident_nuclei_value needs all positions identical");
  const double z = frame.total_charge();
  return -z * z / 4.0;
}

// ---------------------------------------------------------------------------
// checkers

/// <f, sum_l |x - R_l|^{-1} f>  <=  ||grad f||^2 + {(16 sqrt2 + 12 L^{2/3})/b + 2} ||f||^2
inline BoundReport lemma21_sides(const Orbital& f, const NuclearFrame& frame, double b) {
  if (!(b > 0)) throw InvalidArgument("lemma21: b must be positive");
  for (const auto& n : frame.nuclei())
    if (n.charge != 1) throw InvalidArgument("lemma21: frame must carry unit charges");
  if (frame.size() >= 2 && !(frame.min_separation() > b))
    throw InvalidArgument("lemma21: nuclear spacing must exceed b");
  validate(f);
  OrbitalSet one(std::vector<Orbital>{f});
  const double norm2 = one.gram()(0, 0);
  const double grad2 = one.kinetic_matrix()(0, 0);
  const double lhs = one.attraction_matrix(frame)(0, 0);
  const double l = frame.size();
  const double rhs = grad2 + ((16.0 * std::sqrt(2.0) + 12.0 * std::cbrt(l * l)) / b + 2.0) * norm2;
  const double tol = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return make_report("lemma21", lhs, rhs, tol, "L=" + std::to_string(frame.size()) + " b=" + format_number(b));
}

/// P^2 - P/N <= Q
inline BoundReport lemma31_check(const CIState& state, const RegionOverlap& overlap) {
  if (state.electrons() < 2) return not_applicable("lemma31", "N < 2");
  require_normalized(state, "lemma31_check");
  const auto f = functionals(state, overlap);
  const double n = state.electrons();
  return make_report("lemma31", f.P * f.P - f.P / n, *f.Q, checker_tolerance(overlap.abs_tol),
                     "N=" + std::to_string(state.electrons()) + " region=" + overlap.region.kind());
}

inline BoundReport lemma31_check(const CIState& state, const Region& region, double tol = 1e-10,
                                 const QuadratureOptions& quadrature = {}) {
  if (state.electrons() < 2) return not_applicable("lemma31", "N < 2");
  return lemma31_check(state, region_overlap(state.orbitals(), region, tol, quadrature));
}

inline BoundReport lemma31_check(const CIState& state, WholeSpace) {
  if (state.electrons() < 2) return not_applicable("lemma31", "N < 2");
  require_normalized(state, "lemma31_check");
  const auto f = functionals(state, WholeSpace{});
  const double n = state.electrons();
  return make_report("lemma31", f.P * f.P - f.P / n, *f.Q, 1e-9, "whole space");
}

struct ChainReport {
  std::vector<BoundReport> links;
  bool applicable{true};
  std::string context;

  bool satisfied() const {
    for (const auto& l : links)
      if (!l.satisfied) return false;
    return true;
  }
  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& l : links) m = std::min(m, l.margin);
    return m;
  }
};

struct ChainOptions {
  double overlap_tol{1e-10};
  RestrictedRepulsionOptions repulsion{};
};

/// The inequalities of the energy lower bound, each link as lhs <= rhs:
///   one-body:    N C                          <= <sum h_i>
///   restriction: R_Omega                      <= <sum_{i<j} |x_i - x_j|^-1>
///   diameter:    N(N-1)/(2d) Q                <= R_Omega
///   pair:        P^2 - P/N                    <= Q
///   overall:     N(N-1)/(2d)(P^2 - P/N) + N C <= E
inline ChainReport energy_chain_check(const CIState& state, const NuclearFrame& frame, const Region& region,
                                      const ChainOptions& opts = {}) {
  ChainReport out;
  if (state.electrons() < 2) {
    out.applicable = false;
    out.context = "N < 2";
    return out;
  }
  require_normalized(state, "energy_chain_check");
  const double c = lemma22_constant(frame);
  const double n = state.electrons();
  const double d = diameter(region);
  const auto e = energy(state, frame);
  const auto overlap = region_overlap(state.orbitals(), region, opts.overlap_tol);
  const auto f = functionals(state, overlap);
  const auto rr = restricted_repulsion(state, region, opts.repulsion);
  const double q_tol = checker_tolerance(overlap.abs_tol);
  const double r_tol = checker_tolerance(rr.error_estimate + opts.repulsion.outer_tol);
  const double pair_scale = n * (n - 1.0) / (2.0 * d);
  const double lemma31_lhs = f.P * f.P - f.P / n;

  out.links.push_back(make_report("energy-chain:one-body", n * c, e.kinetic + e.attraction, 1e-9));
  out.links.push_back(make_report("energy-chain:restriction", rr.value, e.repulsion, r_tol));
  out.links.push_back(make_report("energy-chain:diameter", pair_scale * *f.Q, rr.value, r_tol + pair_scale * q_tol));
  out.links.push_back(make_report("energy-chain:pair", lemma31_lhs, *f.Q, q_tol));
  out.links.push_back(make_report("energy-chain:overall", pair_scale * lemma31_lhs + n * c, e.total, r_tol + pair_scale * q_tol));
  out.context = "d=" + format_number(d) + " E=" + format_number(e.total) + " R_omega=" + format_number(rr.value);
  return out;
}

/// int_Omega rho <= theorem_rhs for normalized antisymmetric states with <Psi, H Psi> <= 0.
inline BoundReport theorem_certificate(const CIState& state, const NuclearFrame& frame, const Region& region,
                                       double overlap_tol = 1e-10, const QuadratureOptions& quadrature = {}) {
  if (state.electrons() < 2) return not_applicable("theorem", "N < 2: bound undefined");
  require_normalized(state, "theorem_certificate");
  const double e = rayleigh_quotient(state, frame);
  if (e > 0.0) return not_applicable("theorem", "energy " + format_number(e) + " > 0");
  const auto overlap = region_overlap(state.orbitals(), region, overlap_tol, quadrature);
  const auto f = functionals(state, overlap);
  const double d = diameter(region);
  const double rhs = theorem_rhs(state.electrons(), frame, d);
  return make_report("theorem", f.rho_integral, rhs, checker_tolerance(overlap.abs_tol) * state.electrons(),
                     "E=" + format_number(e) + " d=" + format_number(d));
}

}  // namespace rhobound
