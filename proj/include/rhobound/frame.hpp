#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rhobound/core.hpp"

namespace rhobound {

struct Nucleus {
  Vec3 position{Vec3::Zero()};
  int charge{1};
};

/// Point charge with a real-valued charge; used where scaled Hamiltonians need Z/s.
struct PointCharge {
  Vec3 position{Vec3::Zero()};
  double charge{1.0};
};

/// Nuclear positions and atomic numbers, plus an optional separation floor `a` with
/// min_{l != m} |R_l - R_m| > a.
class NuclearFrame {
 public:
  explicit NuclearFrame(std::vector<Nucleus> nuclei, std::optional<double> separation_floor = std::nullopt)
      : nuclei_(std::move(nuclei)), floor_(separation_floor) {
    if (nuclei_.empty()) throw InvalidArgument("nuclear frame needs at least one nucleus");
    for (const auto& n : nuclei_) {
      if (n.charge < 1) throw InvalidArgument("nuclear charges must be positive integers");
      if (!n.position.allFinite()) throw InvalidArgument("nuclear positions must be finite");
    }
    if (floor_) {
      if (!(*floor_ > 0) || !std::isfinite(*floor_))
        throw InvalidArgument("separation floor a must be positive and finite");
      if (nuclei_.size() >= 2 && !(min_separation() > *floor_))
        throw InvalidArgument("min nuclear separation " + format_number(min_separation()) +
                              " does not exceed a = " + format_number(*floor_));
    }
  }

  static NuclearFrame atom(int charge, std::optional<double> a = std::nullopt, const Vec3& at = Vec3::Zero()) {
    return NuclearFrame({Nucleus{at, charge}}, a);
  }

  const std::vector<Nucleus>& nuclei() const { return nuclei_; }
  int size() const { return static_cast<int>(nuclei_.size()); }
  const std::optional<double>& separation_floor() const { return floor_; }

  /// Script Z: the largest atomic number.
  int max_charge() const {
    int z = 0;
    for (const auto& n : nuclei_) z = std::max(z, n.charge);
    return z;
  }

  int total_charge() const {
    int z = 0;
    for (const auto& n : nuclei_) z += n.charge;
    return z;
  }

  /// Infinity for a single nucleus.
  double min_separation() const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nuclei_.size(); ++i)
      for (std::size_t j = i + 1; j < nuclei_.size(); ++j)
        d = std::min(d, (nuclei_[i].position - nuclei_[j].position).norm());
    return d;
  }

  bool all_coincident() const {
    for (const auto& n : nuclei_)
      if ((n.position - nuclei_.front().position).norm() != 0.0) return false;
    return true;
  }

  std::vector<PointCharge> point_charges() const {
    std::vector<PointCharge> out;
    out.reserve(nuclei_.size());
    for (const auto& n : nuclei_) out.push_back({n.position, static_cast<double>(n.charge)});
    return out;
  }

  NuclearFrame translated(const Vec3& shift) const {
    auto moved = nuclei_;
    for (auto& n : moved) n.position += shift;
    return NuclearFrame(std::move(moved), floor_);
  }

  NuclearFrame with_position(int l, const Vec3& position) const {
    auto moved = nuclei_;
    moved.at(l).position = position;
    return NuclearFrame(std::move(moved), std::nullopt);
  }

  NuclearFrame with_separation_floor(std::optional<double> a) const { return NuclearFrame(nuclei_, a); }

 private:
  std::vector<Nucleus> nuclei_;
  std::optional<double> floor_;
};

}  // namespace rhobound
