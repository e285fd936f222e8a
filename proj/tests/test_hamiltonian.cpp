#include "catch_amalgamated.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "rhobound/hamiltonian.hpp"
#include "rhobound/random.hpp"
#include "rhobound/spectral.hpp"

using namespace rhobound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::shared_ptr<const OrbitalSet> eigen_set(const NuclearFrame& frame, int per_center, double alpha0, double beta) {
  std::vector<Orbital> fns;
  for (const auto& n : frame.nuclei()) {
    const auto part = even_tempered(EvenTemperedSpec{per_center, alpha0, beta, n.position});
    fns.insert(fns.end(), part.begin(), part.end());
  }
  const OrbitalSet basis(fns);
  return std::make_shared<const OrbitalSet>(eigenorbitals(frame, basis, basis.size()));
}

std::vector<oracle::Function> oracle_orbitals(const OrbitalSet& set) {
  std::vector<oracle::Function> out;
  for (int i = 0; i < set.size(); ++i) {
    oracle::Function f;
    for (const auto& t : set.orbital(i).terms) f.push_back({t.coefficient, t.primitive.center, t.primitive.exponent});
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("one-electron energies", "[hamiltonian]") {
  const NuclearFrame h = NuclearFrame::atom(1);
  const auto set = eigen_set(h, 10, 1e-3, 3.0);
  const auto e = energy(CIState::single(set, {0}), h);
  CHECK(e.repulsion == 0.0);
  CHECK(e.total > -0.25);
  CHECK(e.total < -0.249);
  CHECK_THAT(e.total, WithinAbs(e.kinetic + e.attraction, 1e-15));
  // virial theorem for the Coulomb problem in a near-complete basis: 2T = -V
  CHECK_THAT(2.0 * e.kinetic, WithinRel(-e.attraction, 1e-3));
  CHECK_THROWS_AS(energy(CIState(set, {CITerm{0.5, Determinant({0})}}), h), InvalidArgument);
}

TEST_CASE("distant electrons repel like point charges", "[hamiltonian]") {
  const double r = 20.0;
  const auto set = std::make_shared<const OrbitalSet>(orthonormalize(OrbitalSet(std::vector<Orbital>{
      normalized_primitive(Vec3::Zero(), 2.0), normalized_primitive(Vec3(0, 0, r), 2.0)})));
  const NuclearFrame frame({Nucleus{Vec3::Zero(), 1}, Nucleus{Vec3(0, 0, r), 1}});
  const auto e = energy(CIState::single(set, {0, 1}), frame);
  CHECK_THAT(e.repulsion, WithinAbs(1.0 / r, 1e-10));
  CHECK_THAT(nuclear_repulsion(frame), WithinAbs(1.0 / r, 1e-15));
}

TEST_CASE("two-electron energy against a 6-D Monte Carlo oracle", "[hamiltonian][oracle]") {
  // E = int |grad_x Psi|^2 + |grad_y Psi|^2 + (V(x) + V(y) + 1/|x - y|) |Psi|^2, importance sampled
  // from q(x) q(y) with q a normal density.
  const NuclearFrame frame({Nucleus{Vec3(0, 0, -0.6), 1}, Nucleus{Vec3(0, 0, 0.6), 2}});
  const auto set = eigen_set(frame, 4, 0.2, 3.0);
  const auto orbs = oracle_orbitals(*set);
  std::mt19937_64 rng(61);
  const auto state = random_ci_state(rng, set, 2, 3);
  const double sigma = 1.2;
  std::normal_distribution<double> normal(0.0, sigma);
  const auto q = [&](const Vec3& x) { return std::exp(-x.squaredNorm() / (2 * sigma * sigma)) / std::pow(2 * oracle::pi * sigma * sigma, 1.5); };
  const auto draw = [&] { return std::array<Vec3, 2>{Vec3(normal(rng), normal(rng), normal(rng)), Vec3(normal(rng), normal(rng), normal(rng))}; };
  const auto local = [&](const std::array<Vec3, 2>& xy) {
    const Vec3 &x = xy[0], &y = xy[1];
    double psi = 0.0;
    Vec3 gx = Vec3::Zero(), gy = Vec3::Zero();
    for (const auto& t : state.terms()) {
      const int a = t.determinant[0], b = t.determinant[1];
      const double c = t.coefficient / std::sqrt(2.0);
      const double ax = oracle::value(orbs[a], x), bx = oracle::value(orbs[b], x);
      const double ay = oracle::value(orbs[a], y), by = oracle::value(orbs[b], y);
      psi += c * (ax * by - bx * ay);
      gx += c * (oracle::gradient(orbs[a], x) * by - oracle::gradient(orbs[b], x) * ay);
      gy += c * (ax * oracle::gradient(orbs[b], y) - bx * oracle::gradient(orbs[a], y));
    }
    double v = 1.0 / (x - y).norm();
    for (const auto& n : frame.nuclei()) v -= n.charge * (1.0 / (x - n.position).norm() + 1.0 / (y - n.position).norm());
    return (gx.squaredNorm() + gy.squaredNorm() + v * psi * psi) / (q(x) * q(y));
  };
  const auto est = oracle::monte_carlo(3000000, draw, local);
  const double e = energy(state, frame).total;
  INFO("E=" << e << " MC=" << est.mean << " +- " << est.stderr_);
  CHECK(std::abs(e - est.mean) < 3.0 * est.stderr_);
  CHECK(est.stderr_ < 0.05);
}

TEST_CASE("energy is invariant under rigid translation", "[hamiltonian][property]") {
  const NuclearFrame frame({Nucleus{Vec3(0, 0, -0.7), 1}, Nucleus{Vec3(0, 0, 0.7), 1}});
  const auto set = eigen_set(frame, 5, 0.1, 3.0);
  std::mt19937_64 rng(62);
  const auto state = random_ci_state(rng, set, 2, 4);
  const Vec3 shift(1.3, -0.4, 2.2);
  std::vector<GaussianPrimitive> prims = set->primitives();
  for (auto& g : prims) g.center += shift;
  const auto moved_set = std::make_shared<const OrbitalSet>(prims, set->coefficients(), true);
  const auto e0 = energy(state, frame);
  const auto e1 = energy(state.with_orbitals(moved_set), frame.translated(shift));
  CHECK_THAT(e1.total, WithinAbs(e0.total, 1e-9));
  CHECK_THAT(equilibrium_residual(state.with_orbitals(moved_set), frame.translated(shift)),
             WithinAbs(equilibrium_residual(state, frame), 1e-9));
}

TEST_CASE("nuclear repulsion", "[hamiltonian]") {
  CHECK(nuclear_repulsion(NuclearFrame::atom(3)) == 0.0);
  const NuclearFrame tri({Nucleus{Vec3(0, 0, 0), 1}, Nucleus{Vec3(2, 0, 0), 2}, Nucleus{Vec3(0, 4, 0), 3}});
  CHECK_THAT(nuclear_repulsion(tri), WithinAbs(2.0 / 2.0 + 3.0 / 4.0 + 6.0 / std::sqrt(20.0), 1e-15));
  const NuclearFrame twin({Nucleus{Vec3::Zero(), 1}, Nucleus{Vec3::Zero(), 1}});
  CHECK_THROWS_AS(nuclear_repulsion(twin), InvalidArgument);
}

TEST_CASE("Hellmann-Feynman forces", "[hamiltonian][forces]") {
  SECTION("spherical atom feels no electronic force") {
    const NuclearFrame he = NuclearFrame::atom(2);
    const auto set = eigen_set(he, 8, 0.01, 3.0);
    const auto f = hf_force(CIState::single(set, {0, 1}), he);
    CHECK(f.electronic[0].norm() < 1e-12);
    CHECK(f.equilibrium_residual < 1e-12);
  }
  SECTION("symmetric diatomic forces are equal and opposite") {
    const NuclearFrame h2({Nucleus{Vec3(0, 0, -0.7), 1}, Nucleus{Vec3(0, 0, 0.7), 1}});
    const auto set = eigen_set(h2, 6, 0.05, 3.0);
    for (const auto& occ : {std::vector<int>{0}, std::vector<int>{0, 1}, std::vector<int>{1, 2}}) {
      const auto f = hf_force(CIState::single(set, occ), h2);
      CHECK((f.total[0] + f.total[1]).norm() < 1e-8);
      CHECK(std::abs(f.total[0].x()) < 1e-10);
      CHECK(std::abs(f.total[0].y()) < 1e-10);
    }
  }
  SECTION("analytic against finite differences") {
    for (int trial = 0; trial < 10; ++trial) {
      auto rng = trial_engine(63, "forces", trial);
      const NuclearFrame frame = random_frame(rng, 1 + trial % 3, 0.8, 2, 1.0);
      const auto set = random_orbital_set(rng, 4);
      const auto state = random_ci_state(rng, set, 1 + trial % 3);
      const auto f = hf_force(state, frame);
      const auto fd = hf_force_finite_difference(state, frame);
      for (int l = 0; l < frame.size(); ++l) CHECK((f.electronic[l] - fd[l]).norm() < 1e-6);
    }
  }
  SECTION("total electronic force is the translation derivative") {
    auto rng = trial_engine(64, "translate", 0);
    const NuclearFrame frame = random_frame(rng, 3, 0.8, 2, 1.0);
    const auto set = random_orbital_set(rng, 4);
    const auto state = random_ci_state(rng, set, 2);
    const auto w = [&](const Vec3& shift) {
      double s = 0.0;
      for (const auto& n : frame.nuclei()) s += attraction_expectation(state, n.position + shift, n.charge);
      return s;
    };
    Vec3 sum = Vec3::Zero();
    for (const auto& e : hf_force(state, frame).electronic) sum += e;
    const double h = 1e-4;
    for (int k = 0; k < 3; ++k) {
      Vec3 d = Vec3::Zero();
      d[k] = h;
      CHECK_THAT(sum[k], WithinAbs((w(d) - w(-d)) / (2 * h), 1e-6));
    }
  }
  SECTION("nuclear part by hand") {
    const NuclearFrame h2({Nucleus{Vec3(0, 0, 0), 1}, Nucleus{Vec3(0, 0, 2), 3}});
    const auto set = eigen_set(h2, 3, 0.3, 3.0);
    const auto f = hf_force(CIState::single(set, {0}), h2);
    CHECK_THAT(f.nuclear[0].z(), WithinAbs(3.0 / 4.0, 1e-15));
    CHECK_THAT(f.nuclear[1].z(), WithinAbs(-3.0 / 4.0, 1e-15));
  }
  SECTION("coincident nuclei are rejected") {
    const NuclearFrame twin({Nucleus{Vec3::Zero(), 1}, Nucleus{Vec3::Zero(), 1}});
    const auto set = eigen_set(NuclearFrame::atom(2), 3, 0.3, 3.0);
    CHECK_THROWS_AS(hf_force(CIState::single(set, {0}), twin), InvalidArgument);
  }
}

TEST_CASE("bond scan: trial-state forces are not the energy gradient", "[hamiltonian][forces]") {
  // one-electron H2+ with a basis that follows the nuclei
  std::vector<double> rs, energies, forces;
  for (double r = 3.0; r <= 5.41; r += 0.2) {
    const NuclearFrame frame({Nucleus{Vec3(0, 0, -r / 2), 1}, Nucleus{Vec3(0, 0, r / 2), 1}});
    const auto set = eigen_set(frame, 10, 0.02, 2.5);
    const auto state = CIState::single(set, {0});
    const auto f = hf_force(state, frame);
    const auto fd = hf_force_finite_difference(state, frame);
    CHECK_THAT(f.electronic[1].z(), WithinAbs(fd[1].z(), 1e-6));
    rs.push_back(r);
    energies.push_back(energy(state, frame).total + nuclear_repulsion(frame));
    forces.push_back(f.total[1].z());
  }
  const auto emin = std::min_element(energies.begin(), energies.end()) - energies.begin();
  REQUIRE(emin > 0);
  REQUIRE(emin + 1 < static_cast<long>(rs.size()));
  // s functions cannot polarize, so the frozen-orbital force stays attractive past the relaxed minimum
  for (double f : forces) CHECK(f < 0);
  CHECK(std::abs(forces[emin]) > 1e-3);
}

TEST_CASE("restricted repulsion", "[hamiltonian][region]") {
  const NuclearFrame he = NuclearFrame::atom(2);
  const auto set = eigen_set(he, 6, 0.05, 3.0);
  const auto state = CIState::single(set, {0, 1});
  const double full = energy(state, he).repulsion;
  const auto big = restricted_repulsion(state, Region::ball(Vec3::Zero(), 8.0), RestrictedRepulsionOptions{1e-8, 16, 12, {}});
  CHECK_THAT(big.value, WithinAbs(full, 1e-5 + 10 * big.error_estimate));
  const auto small = restricted_repulsion(state, Region::ball(Vec3::Zero(), 0.8));
  CHECK(small.value > 0.0);
  CHECK(small.value < full);
  const auto one = restricted_repulsion(CIState::single(set, {0}), Region::ball(Vec3::Zero(), 0.8));
  CHECK(one.value == 0.0);
}
