#pragma once

// Bounded regions (balls, boxes, finite unions of balls), their diameters,
// membership, ray clipping, and adaptively refined integration rules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rhobound/core.hpp"
#include "rhobound/gauss_legendre.hpp"

namespace rhobound {

struct Ball {
  Vec3 center{Vec3::Zero()};
  double radius{1.0};
};

struct Box {
  Vec3 lo{Vec3::Zero()};
  Vec3 hi{Vec3::Ones()};
};

struct BallUnion {
  std::vector<Ball> balls;
};

class Region {
 public:
  using Shape = std::variant<Ball, Box, BallUnion>;

  explicit Region(Ball ball) : shape_(std::move(ball)) { validate(); }
  explicit Region(Box box) : shape_(std::move(box)) { validate(); }
  explicit Region(BallUnion balls) : shape_(std::move(balls)) { validate(); }

  static Region ball(const Vec3& center, double radius) { return Region(Ball{center, radius}); }
  static Region box(const Vec3& lo, const Vec3& hi) { return Region(Box{lo, hi}); }

  const Shape& shape() const { return shape_; }

  std::string kind() const {
    switch (shape_.index()) {
      case 0: return "ball";
      case 1: return "box";
      default: return "union";
    }
  }

  template <class Visitor>
  decltype(auto) visit(Visitor&& v) const {
    return std::visit(std::forward<Visitor>(v), shape_);
  }

  /// A point guaranteed to lie in the region.
  Vec3 anchor() const {
    if (auto* b = std::get_if<Ball>(&shape_)) return b->center;
    if (auto* x = std::get_if<Box>(&shape_)) return 0.5 * (x->lo + x->hi);
    return std::get<BallUnion>(shape_).balls.front().center;
  }

  Region translated(const Vec3& shift) const {
    return visit([&](auto s) -> Region {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Ball>) {
        s.center += shift;
      } else if constexpr (std::is_same_v<T, Box>) {
        s.lo += shift;
        s.hi += shift;
      } else {
        for (auto& b : s.balls) b.center += shift;
      }
      return Region(s);
    });
  }

  /// Uniform dilation about the origin.
  Region scaled(double factor) const {
    if (!(factor > 0)) throw InvalidArgument("Region::scaled: factor must be positive");
    return visit([&](auto s) -> Region {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Ball>) {
        s.center *= factor;
        s.radius *= factor;
      } else if constexpr (std::is_same_v<T, Box>) {
        s.lo *= factor;
        s.hi *= factor;
      } else {
        for (auto& b : s.balls) {
          b.center *= factor;
          b.radius *= factor;
        }
      }
      return Region(s);
    });
  }

 private:
  static void check_ball(const Ball& b) {
    if (!(b.radius > 0) || !std::isfinite(b.radius) || !b.center.allFinite())
      throw InvalidArgument("ball radius must be positive and finite");
  }

  void validate() const {
    if (auto* b = std::get_if<Ball>(&shape_)) {
      check_ball(*b);
    } else if (auto* x = std::get_if<Box>(&shape_)) {
      if (!x->lo.allFinite() || !x->hi.allFinite() || !(x->lo.array() < x->hi.array()).all())
        throw InvalidArgument("box requires lo < hi componentwise");
    } else {
      const auto& u = std::get<BallUnion>(shape_);
      if (u.balls.empty()) throw InvalidArgument("ball union must be non-empty");
      for (const auto& ball : u.balls) check_ball(ball);
    }
  }

  Shape shape_;
};

inline double diameter(const Region& region) {
  if (auto* b = std::get_if<Ball>(&region.shape())) return 2.0 * b->radius;
  if (auto* x = std::get_if<Box>(&region.shape())) return (x->hi - x->lo).norm();
  const auto& balls = std::get<BallUnion>(region.shape()).balls;
  double d = 0.0;
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i; j < balls.size(); ++j)
      d = std::max(d, (balls[i].center - balls[j].center).norm() + balls[i].radius + balls[j].radius);
  return d;
}

inline bool contains(const Ball& b, const Vec3& p) { return (p - b.center).squaredNorm() <= b.radius * b.radius; }

inline bool contains(const Region& region, const Vec3& p) {
  if (auto* b = std::get_if<Ball>(&region.shape())) return contains(*b, p);
  if (auto* x = std::get_if<Box>(&region.shape()))
    return (p.array() >= x->lo.array()).all() && (p.array() <= x->hi.array()).all();
  for (const auto& b : std::get<BallUnion>(region.shape()).balls)
    if (contains(b, p)) return true;
  return false;
}

/// Exact volume for balls and boxes; unions are not supported (overlaps).
inline double volume(const Region& region) {
  if (auto* b = std::get_if<Ball>(&region.shape())) return 4.0 / 3.0 * kPi * std::pow(b->radius, 3);
  if (auto* x = std::get_if<Box>(&region.shape())) return (x->hi - x->lo).prod();
  throw InvalidArgument("volume: ball unions have no closed-form volume");
}

struct Interval {
  double lo;
  double hi;
};

/// Parameters t >= 0 with origin + t*dir inside the region, as sorted disjoint intervals.
/// `dir` must be a unit vector.
inline std::vector<Interval> ray_intervals(const Region& region, const Vec3& origin, const Vec3& dir) {
  const auto ball_hit = [&](const Ball& b, std::vector<Interval>& out) {
    const Vec3 oc = origin - b.center;
    const double half_b = dir.dot(oc);
    const double disc = half_b * half_b - (oc.squaredNorm() - b.radius * b.radius);
    if (disc <= 0) return;
    const double s = std::sqrt(disc);
    const double t0 = std::max(0.0, -half_b - s), t1 = -half_b + s;
    if (t1 > t0) out.push_back({t0, t1});
  };
  std::vector<Interval> raw;
  if (auto* b = std::get_if<Ball>(&region.shape())) {
    ball_hit(*b, raw);
    return raw;
  }
  if (auto* x = std::get_if<Box>(&region.shape())) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir[k]) < 1e-300) {
        if (origin[k] < x->lo[k] || origin[k] > x->hi[k]) return raw;
        continue;
      }
      double a = (x->lo[k] - origin[k]) / dir[k], c = (x->hi[k] - origin[k]) / dir[k];
      if (a > c) std::swap(a, c);
      t0 = std::max(t0, a);
      t1 = std::min(t1, c);
    }
    if (t1 > t0) raw.push_back({t0, t1});
    return raw;
  }
  for (const auto& b : std::get<BallUnion>(region.shape()).balls) ball_hit(b, raw);
  std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    else
      merged.push_back(iv);
  }
  return merged;
}

struct QuadratureRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  double target_abs_tol{0.0};

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

struct QuadratureOptions {
  std::size_t node_cap{3'000'000};
};

/// Radial Gauss-Legendre x polar Gauss-Legendre (in cos theta) x uniform azimuth (2*polar points).
inline QuadratureRule ball_rule(const Ball& ball, int radial, int polar) {
  const auto gr = gauss_legendre(radial, 0.0, ball.radius);
  const auto gt = gauss_legendre(polar);
  const int azimuth = 2 * polar;
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(radial) * polar * azimuth);
  rule.weights.reserve(rule.nodes.capacity());
  std::vector<double> cphi(azimuth), sphi(azimuth);
  for (int k = 0; k < azimuth; ++k) {
    const double phi = 2.0 * kPi * (k + 0.5) / azimuth;
    cphi[k] = std::cos(phi);
    sphi[k] = std::sin(phi);
  }
  const double wphi = 2.0 * kPi / azimuth;
  for (int i = 0; i < radial; ++i) {
    const double r = gr.nodes[i], wr = gr.weights[i] * r * r;
    for (int j = 0; j < polar; ++j) {
      const double ct = gt.nodes[j], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      const double w = wr * gt.weights[j] * wphi;
      for (int k = 0; k < azimuth; ++k) {
        rule.nodes.emplace_back(ball.center + r * Vec3(st * cphi[k], st * sphi[k], ct));
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

/// Tensor Gauss-Legendre rule with n[k] points along axis k.
inline QuadratureRule box_rule(const Box& box, int nx, int ny, int nz) {
  const auto gx = gauss_legendre(nx, box.lo.x(), box.hi.x());
  const auto gy = gauss_legendre(ny, box.lo.y(), box.hi.y());
  const auto gz = gauss_legendre(nz, box.lo.z(), box.hi.z());
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(nx) * ny * nz);
  rule.weights.reserve(rule.nodes.capacity());
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        rule.nodes.emplace_back(gx.nodes[i], gy.nodes[j], gz.nodes[k]);
        rule.weights.push_back(gx.weights[i] * gy.weights[j] * gz.weights[k]);
      }
  return rule;
}

/// Covering rule for a union: each ball's rule with nodes already inside an earlier ball dropped.
inline QuadratureRule union_rule(const BallUnion& u, int radial, int polar) {
  QuadratureRule rule;
  for (std::size_t b = 0; b < u.balls.size(); ++b) {
    const auto part = ball_rule(u.balls[b], radial, polar);
    for (std::size_t i = 0; i < part.size(); ++i) {
      bool masked = false;
      for (std::size_t e = 0; e < b && !masked; ++e) masked = contains(u.balls[e], part.nodes[i]);
      if (masked) continue;
      rule.nodes.push_back(part.nodes[i]);
      rule.weights.push_back(part.weights[i]);
    }
  }
  return rule;
}

namespace detail {

inline std::vector<int> initial_resolution(const Region& region) {
  if (std::holds_alternative<Box>(region.shape())) return {6, 6, 6};
  return {8, 4};
}

inline int next_resolution(int n) { return n + std::max(2, n / 2); }

inline std::size_t node_count(const Region& region, const std::vector<int>& res) {
  if (std::holds_alternative<Box>(region.shape()))
    return static_cast<std::size_t>(res[0]) * res[1] * res[2];
  std::size_t per_ball = static_cast<std::size_t>(res[0]) * res[1] * 2 * res[1];
  if (auto* u = std::get_if<BallUnion>(&region.shape())) per_ball *= u->balls.size();
  return per_ball;
}

inline QuadratureRule rule_at(const Region& region, const std::vector<int>& res) {
  if (auto* b = std::get_if<Ball>(&region.shape())) return ball_rule(*b, res[0], res[1]);
  if (auto* x = std::get_if<Box>(&region.shape())) return box_rule(*x, res[0], res[1], res[2]);
  return union_rule(std::get<BallUnion>(region.shape()), res[0], res[1]);
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Greedy dimension-adaptive refinement: raise the resolution along whichever axis of the
/// rule family changes `functional(rule)` the most, until every single-axis refinement changes
/// it by less than `tol` (max-abs over the returned vector). Returns the rule refined along
/// every axis once more than the converged resolution.
template <class Functional>
QuadratureRule adaptive_rule(const Region& region, double tol, Functional&& functional,
                             const QuadratureOptions& opts = {}) {
  if (!(tol > 0)) throw InvalidArgument("quadrature tolerance must be positive");
  std::vector<int> res = detail::initial_resolution(region);
  const auto check_cap = [&](const std::vector<int>& r) {
    if (detail::node_count(region, r) > opts.node_cap)
      throw QuadratureCapExceeded("quadrature node cap (" + std::to_string(opts.node_cap) +
                                  ") exceeded before reaching tolerance " + format_number(tol) +
                                  " on " + region.kind());
  };
  Vector base = functional(detail::rule_at(region, res));
  for (;;) {
    double worst = -1.0;
    std::size_t worst_axis = 0;
    Vector worst_value;
    for (std::size_t axis = 0; axis < res.size(); ++axis) {
      auto trial = res;
      trial[axis] = detail::next_resolution(trial[axis]);
      check_cap(trial);
      Vector v = functional(detail::rule_at(region, trial));
      const double change = detail::max_abs_diff(v, base);
      if (change > worst) {
        worst = change;
        worst_axis = axis;
        worst_value = std::move(v);
      }
    }
    if (worst < tol) break;
    res[worst_axis] = detail::next_resolution(res[worst_axis]);
    base = std::move(worst_value);
  }
  for (auto& r : res) r = detail::next_resolution(r);
  check_cap(res);
  QuadratureRule rule = detail::rule_at(region, res);
  rule.target_abs_tol = tol;
  return rule;
}

/// Rule validated on a unit-exponent Gaussian centered at the region's anchor point.
inline QuadratureRule build_quadrature(const Region& region, double target_abs_tol,
                                       const QuadratureOptions& opts = {}) {
  const Vec3 c = region.anchor();
  return adaptive_rule(
      region, target_abs_tol,
      [&](const QuadratureRule& rule) {
        Vector v(1);
        v[0] = rule.integrate([&](const Vec3& x) { return std::exp(-(x - c).squaredNorm()); });
        return v;
      },
      opts);
}

}  // namespace rhobound
