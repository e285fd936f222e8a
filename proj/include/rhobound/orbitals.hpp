#pragma once

// Contracted s-type Gaussian orbitals: closed-form whole-space integrals (overlap, kinetic
// form <grad a, grad b>, nuclear attraction, electron repulsion, attraction gradient) and
// quadrature-based region-restricted overlaps.
//
// Primitives are unnormalized exp(-alpha |x - A|^2); normalization lives in the coefficients.

#include <Eigen/Eigenvalues>

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhobound/boys.hpp"
#include "rhobound/core.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/geometry.hpp"

namespace rhobound {

struct GaussianPrimitive {
  Vec3 center{Vec3::Zero()};
  double exponent{1.0};
};

struct OrbitalTerm {
  double coefficient;
  GaussianPrimitive primitive;
};

struct Orbital {
  std::vector<OrbitalTerm> terms;

  double operator()(const Vec3& x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.coefficient * std::exp(-t.primitive.exponent * (x - t.primitive.center).squaredNorm());
    return v;
  }
};

inline void validate(const GaussianPrimitive& g) {
  if (!(g.exponent > 0) || !std::isfinite(g.exponent)) throw InvalidArgument("Gaussian exponent must be positive");
  if (!g.center.allFinite()) throw InvalidArgument("Gaussian center must be finite");
}

inline void validate(const Orbital& o) {
  if (o.terms.empty()) throw InvalidArgument("orbital needs at least one primitive");
  for (const auto& t : o.terms) {
    validate(t.primitive);
    if (!std::isfinite(t.coefficient)) throw InvalidArgument("orbital coefficient must be finite");
  }
}

/// exp(-alpha |x - center|^2) scaled to unit L2 norm.
inline Orbital normalized_primitive(const Vec3& center, double exponent) {
  GaussianPrimitive g{center, exponent};
  validate(g);
  return Orbital{{{std::pow(2.0 * exponent / kPi, 0.75), g}}};
}

namespace detail {

struct GaussianProduct {
  double p;   // alpha + beta
  double mu;  // alpha beta / p
  Vec3 center;
  double prefactor;  // exp(-mu |A - B|^2)
};

inline GaussianProduct product(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  const double p = a.exponent + b.exponent;
  const double mu = a.exponent * b.exponent / p;
  return {p, mu, (a.exponent * a.center + b.exponent * b.center) / p,
          std::exp(-mu * (a.center - b.center).squaredNorm())};
}

inline double overlap(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  const auto g = product(a, b);
  return std::pow(kPi / g.p, 1.5) * g.prefactor;
}

/// <grad a, grad b> = <a, -Laplacian b>.
inline double kinetic(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  const auto g = product(a, b);
  const double r2 = (a.center - b.center).squaredNorm();
  return 2.0 * g.mu * (3.0 - 2.0 * g.mu * r2) * std::pow(kPi / g.p, 1.5) * g.prefactor;
}

/// <a, |x - C|^-1 b>.
inline double attraction(const GaussianPrimitive& a, const GaussianPrimitive& b, const Vec3& c) {
  const auto g = product(a, b);
  return 2.0 * kPi / g.p * g.prefactor * boys_f0(g.p * (g.center - c).squaredNorm());
}

/// d/dC <a, |x - C|^-1 b>.
inline Vec3 attraction_gradient(const GaussianPrimitive& a, const GaussianPrimitive& b, const Vec3& c) {
  const auto g = product(a, b);
  return 4.0 * kPi * g.prefactor * boys_f1(g.p * (g.center - c).squaredNorm()) * (g.center - c);
}

inline double repulsion(const GaussianProduct& ab, const GaussianProduct& cd) {
  const double pq = ab.p + cd.p;
  const double t = ab.p * cd.p / pq * (ab.center - cd.center).squaredNorm();
  return 2.0 * std::pow(kPi, 2.5) / (ab.p * cd.p * std::sqrt(pq)) * ab.prefactor * cd.prefactor * boys_f0(t);
}

template <class F>
double contract2(const Orbital& a, const Orbital& b, F&& f) {
  double s = 0.0;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) s += ta.coefficient * tb.coefficient * f(ta.primitive, tb.primitive);
  return s;
}

}  // namespace detail

inline double overlap(const Orbital& a, const Orbital& b) {
  return detail::contract2(a, b, [](const auto& x, const auto& y) { return detail::overlap(x, y); });
}

inline double kinetic(const Orbital& a, const Orbital& b) {
  return detail::contract2(a, b, [](const auto& x, const auto& y) { return detail::kinetic(x, y); });
}

/// <a, sum_l q_l / |x - R_l| b>, reported with a positive sign.
inline double nuclear_attraction(const Orbital& a, const Orbital& b, std::span<const PointCharge> charges) {
  double s = 0.0;
  for (const auto& q : charges)
    s += q.charge * detail::contract2(a, b, [&](const auto& x, const auto& y) { return detail::attraction(x, y, q.position); });
  return s;
}

inline double nuclear_attraction(const Orbital& a, const Orbital& b, const NuclearFrame& frame) {
  const auto q = frame.point_charges();
  return nuclear_attraction(a, b, q);
}

/// Gradient with respect to the position C of a unit point charge of <a, |x - C|^-1 b>.
inline Vec3 attraction_gradient(const Orbital& a, const Orbital& b, const Vec3& c) {
  Vec3 g = Vec3::Zero();
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms)
      g += ta.coefficient * tb.coefficient * detail::attraction_gradient(ta.primitive, tb.primitive, c);
  return g;
}

/// (ab|cd) = int int a(x) b(x) |x - y|^-1 c(y) d(y).
inline double electron_repulsion(const Orbital& a, const Orbital& b, const Orbital& c, const Orbital& d) {
  double s = 0.0;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      const auto ab = detail::product(ta.primitive, tb.primitive);
      const double cab = ta.coefficient * tb.coefficient;
      for (const auto& tc : c.terms)
        for (const auto& td : d.terms)
          s += cab * tc.coefficient * td.coefficient * detail::repulsion(ab, detail::product(tc.primitive, td.primitive));
    }
  return s;
}

/// Chemist-notation two-electron tensor (ij|kl) over n orbitals.
class EriTensor {
 public:
  EriTensor() = default;
  explicit EriTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_{0};
  std::vector<double> data_;
};

/// A list of orbitals stored as a primitive pool and a coefficient matrix
/// (primitives x orbitals). Immutable after construction.
class OrbitalSet {
 public:
  OrbitalSet() = default;

  explicit OrbitalSet(const std::vector<Orbital>& orbitals, bool orthonormal = false) {
    if (orbitals.empty()) throw InvalidArgument("orbital set must be non-empty");
    std::size_t count = 0;
    for (const auto& o : orbitals) {
      validate(o);
      count += o.terms.size();
    }
    primitives_.reserve(count);
    coefficients_ = Matrix::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(orbitals.size()));
    Eigen::Index row = 0;
    for (std::size_t j = 0; j < orbitals.size(); ++j)
      for (const auto& t : orbitals[j].terms) {
        primitives_.push_back(t.primitive);
        coefficients_(row++, static_cast<Eigen::Index>(j)) = t.coefficient;
      }
    orthonormal_ = orthonormal;
    if (orthonormal_) check_orthonormal();
  }

  OrbitalSet(std::vector<GaussianPrimitive> primitives, Matrix coefficients, bool orthonormal)
      : primitives_(std::move(primitives)), coefficients_(std::move(coefficients)), orthonormal_(orthonormal) {
    if (primitives_.empty() || coefficients_.cols() == 0) throw InvalidArgument("orbital set must be non-empty");
    if (static_cast<std::size_t>(coefficients_.rows()) != primitives_.size())
      throw InvalidArgument("coefficient rows must match primitive count");
    for (const auto& g : primitives_) validate(g);
    if (orthonormal_) check_orthonormal();
  }

  int size() const { return static_cast<int>(coefficients_.cols()); }
  bool orthonormal() const { return orthonormal_; }
  const std::vector<GaussianPrimitive>& primitives() const { return primitives_; }
  const Matrix& coefficients() const { return coefficients_; }

  Orbital orbital(int i) const {
    Orbital o;
    for (std::size_t p = 0; p < primitives_.size(); ++p) {
      const double c = coefficients_(static_cast<Eigen::Index>(p), i);
      if (c != 0.0) o.terms.push_back({c, primitives_[p]});
    }
    if (o.terms.empty()) o.terms.push_back({0.0, primitives_.front()});
    return o;
  }

  std::vector<Orbital> orbitals() const {
    std::vector<Orbital> out;
    for (int i = 0; i < size(); ++i) out.push_back(orbital(i));
    return out;
  }

  /// Orbital values at the points: rows = points, columns = orbitals.
  Matrix evaluate(std::span<const Vec3> points) const {
    Matrix prim(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(primitives_.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t p = 0; p < primitives_.size(); ++p)
        prim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
            std::exp(-primitives_[p].exponent * (points[i] - primitives_[p].center).squaredNorm());
    return prim * coefficients_;
  }

  Matrix gram() const { return transform(primitive_matrix([](const auto& a, const auto& b) { return detail::overlap(a, b); })); }

  Matrix kinetic_matrix() const {
    return transform(primitive_matrix([](const auto& a, const auto& b) { return detail::kinetic(a, b); }));
  }

  /// Positive-signed attraction matrix for the given charges.
  Matrix attraction_matrix(std::span<const PointCharge> charges) const {
    return transform(primitive_matrix([&](const auto& a, const auto& b) {
      double s = 0.0;
      for (const auto& q : charges) s += q.charge * detail::attraction(a, b, q.position);
      return s;
    }));
  }

  Matrix attraction_matrix(const NuclearFrame& frame) const {
    const auto q = frame.point_charges();
    return attraction_matrix(q);
  }

  /// Matrices of d/dC <i, |x - C|^-1 j> for the three Cartesian components of C.
  std::array<Matrix, 3> attraction_gradient_matrices(const Vec3& c) const {
    const auto n = static_cast<Eigen::Index>(primitives_.size());
    std::array<Matrix, 3> prim{Matrix(n, n), Matrix(n, n), Matrix(n, n)};
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b <= a; ++b) {
        const Vec3 g = detail::attraction_gradient(primitives_[a], primitives_[b], c);
        for (int k = 0; k < 3; ++k) prim[k](a, b) = prim[k](b, a) = g[k];
      }
    for (auto& m : prim) m = transform(m);
    return prim;
  }

  /// (ij|kl) over the orbitals. Primitive pairs with prefactor below 1e-14 are screened out.
  EriTensor eri() const {
    const auto np = static_cast<Eigen::Index>(primitives_.size());
    const int n = size();
    std::vector<detail::GaussianProduct> pairs;
    pairs.reserve(static_cast<std::size_t>(np * np));
    for (Eigen::Index a = 0; a < np; ++a)
      for (Eigen::Index b = 0; b < np; ++b) pairs.push_back(detail::product(primitives_[a], primitives_[b]));
    const auto npair = static_cast<Eigen::Index>(pairs.size());
    Matrix prim(npair, npair);
    for (Eigen::Index u = 0; u < npair; ++u)
      for (Eigen::Index v = 0; v <= u; ++v) {
        double val = 0.0;
        if (pairs[u].prefactor > 1e-14 && pairs[v].prefactor > 1e-14) val = detail::repulsion(pairs[u], pairs[v]);
        prim(u, v) = prim(v, u) = val;
      }
    // pair transform: T[(ab),(ij)] = C_ai C_bj
    Matrix t(npair, static_cast<Eigen::Index>(n) * n);
    for (Eigen::Index a = 0; a < np; ++a)
      for (Eigen::Index b = 0; b < np; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) t(a * np + b, i * n + j) = coefficients_(a, i) * coefficients_(b, j);
    const Matrix orb = t.transpose() * prim * t;
    EriTensor out(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) out(i, j, k, l) = orb(i * n + j, k * n + l);
    return out;
  }

 private:
  template <class F>
  Matrix primitive_matrix(F&& f) const {
    const auto n = static_cast<Eigen::Index>(primitives_.size());
    Matrix m(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b <= a; ++b) m(a, b) = m(b, a) = f(primitives_[a], primitives_[b]);
    return m;
  }

  Matrix transform(const Matrix& prim) const {
    Matrix m = coefficients_.transpose() * prim * coefficients_;
    return 0.5 * (m + m.transpose());
  }

  void check_orthonormal() const {
    const Matrix g = gram();
    const double dev = (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    if (dev >= 1e-10)
      throw InvalidArgument("orbital set flagged orthonormal but Gram deviates from identity by " + format_number(dev));
  }

  std::vector<GaussianPrimitive> primitives_;
  Matrix coefficients_;
  bool orthonormal_{false};
};

struct OrthonormalizeOptions {
  double min_eigenvalue{1e-10};
  double condition_cap{1e10};
};

/// Symmetric (Loewdin) orthonormalization: C -> C G^{-1/2}.
inline OrbitalSet orthonormalize(const OrbitalSet& set, const OrthonormalizeOptions& opts = {}) {
  const Matrix g = set.gram();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const Vector& lam = eig.eigenvalues();
  const double lo = lam.minCoeff(), hi = lam.maxCoeff();
  if (lo < opts.min_eigenvalue)
    throw SingularGram("orbitals are linearly dependent: smallest Gram eigenvalue " + format_number(lo));
  if (hi / lo > opts.condition_cap)
    throw SingularGram("Gram condition number " + format_number(hi / lo) + " exceeds cap");
  const Matrix x = eig.eigenvectors() * lam.cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  return OrbitalSet(set.primitives(), set.coefficients() * x, true);
}

struct RegionOverlap {
  Matrix matrix;  // (S_Omega)_{ij} = int_Omega psi_i psi_j
  Region region;
  double abs_tol;
  std::size_t nodes{0};

  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Rule on `region` refined until the restricted overlap matrix is stable to `tol` per entry.
inline QuadratureRule overlap_rule(const OrbitalSet& set, const Region& region, double tol,
                                   const QuadratureOptions& opts = {}) {
  return adaptive_rule(
      region, tol,
      [&](const QuadratureRule& rule) {
        const Matrix phi = set.evaluate(rule.nodes);
        const Eigen::Map<const Vector> w(rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size()));
        const Matrix s = phi.transpose() * w.asDiagonal() * phi;
        return Vector(Eigen::Map<const Vector>(s.data(), s.size()));
      },
      opts);
}

inline Matrix restricted_overlap(const OrbitalSet& set, const QuadratureRule& rule) {
  const Matrix phi = set.evaluate(rule.nodes);
  const Eigen::Map<const Vector> w(rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size()));
  const Matrix s = phi.transpose() * w.asDiagonal() * phi;
  return 0.5 * (s + s.transpose());
}

inline RegionOverlap region_overlap(const OrbitalSet& set, const Region& region, double tol = 1e-8,
                                    const QuadratureOptions& opts = {}) {
  const QuadratureRule rule = overlap_rule(set, region, tol, opts);
  return RegionOverlap{restricted_overlap(set, rule), region, tol, rule.size()};
}

// ---------------------------------------------------------------------------
// basis specification strings

struct EvenTemperedSpec {
  int n{1};
  double alpha0{1.0};
  double beta{2.0};
  Vec3 center{Vec3::Zero()};
};

inline std::vector<Orbital> even_tempered(const EvenTemperedSpec& spec) {
  if (spec.n < 1) throw InvalidArgument("even-tempered basis needs n >= 1");
  if (!(spec.alpha0 > 0) || !(spec.beta > 1)) throw InvalidArgument("even-tempered basis needs alpha0 > 0, beta > 1");
  std::vector<Orbital> out;
  double alpha = spec.alpha0;
  for (int k = 0; k < spec.n; ++k, alpha *= spec.beta) out.push_back(normalized_primitive(spec.center, alpha));
  return out;
}

namespace detail {

inline double parse_real(std::string_view s, std::string_view what) {
  std::string buf(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != buf.size()) throw InvalidArgument("basis spec: cannot parse " + std::string(what) + " from '" + buf + "'");
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses "even-tempered:n=<int>,alpha0=<real>,beta=<real>,center=[x,y,z]".
inline EvenTemperedSpec parse_basis_spec(std::string_view text) {
  constexpr std::string_view prefix = "even-tempered:";
  text = detail::trim(text);
  if (text.substr(0, prefix.size()) != prefix) throw InvalidArgument("basis spec must start with 'even-tempered:'");
  text.remove_prefix(prefix.size());
  EvenTemperedSpec spec;
  bool have_n = false, have_alpha = false, have_beta = false;
  while (!text.empty()) {
    std::size_t end = 0;
    int depth = 0;
    while (end < text.size() && (depth > 0 || text[end] != ',')) {
      if (text[end] == '[') ++depth;
      if (text[end] == ']') --depth;
      ++end;
    }
    const std::string_view item = detail::trim(text.substr(0, end));
    text.remove_prefix(std::min(text.size(), end + 1));
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("basis spec: expected key=value, got '" + std::string(item) + "'");
    const auto key = detail::trim(item.substr(0, eq));
    const auto value = detail::trim(item.substr(eq + 1));
    if (key == "n") {
      int n = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
      if (ec != std::errc{} || ptr != value.data() + value.size()) throw InvalidArgument("basis spec: bad n");
      spec.n = n;
      have_n = true;
    } else if (key == "alpha0") {
      spec.alpha0 = detail::parse_real(value, "alpha0");
      have_alpha = true;
    } else if (key == "beta") {
      spec.beta = detail::parse_real(value, "beta");
      have_beta = true;
    } else if (key == "center") {
      if (value.size() < 2 || value.front() != '[' || value.back() != ']') throw InvalidArgument("basis spec: center must be [x,y,z]");
      auto inner = value.substr(1, value.size() - 2);
      for (int k = 0; k < 3; ++k) {
        const auto comma = inner.find(',');
        if ((k < 2) == (comma == std::string_view::npos)) throw InvalidArgument("basis spec: center must have 3 components");
        spec.center[k] = detail::parse_real(detail::trim(inner.substr(0, comma)), "center");
        inner = comma == std::string_view::npos ? std::string_view{} : inner.substr(comma + 1);
      }
    } else {
      throw InvalidArgument("basis spec: unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_n || !have_alpha || !have_beta) throw InvalidArgument("basis spec requires n, alpha0 and beta");
  if (spec.n < 1 || !(spec.alpha0 > 0) || !(spec.beta > 1)) throw InvalidArgument("basis spec: need n >= 1, alpha0 > 0, beta > 1");
  return spec;
}

}  // namespace rhobound
