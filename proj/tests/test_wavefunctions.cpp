#include "catch_amalgamated.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "rhobound/random.hpp"
#include "rhobound/wavefunctions.hpp"

using namespace rhobound;
using Catch::Matchers::WithinAbs;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = uniform(rng, -1.0, 1.0);
  return m;
}

/// A chemist-notation kernel with the (pq|rs) = (qp|rs) = (rs|pq) symmetries.
EriTensor random_kernel(std::mt19937_64& rng, int n) {
  EriTensor t(n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) t(p, q, r, s) = 0.0;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s <= r; ++s) {
          if (p * n + q < r * n + s) continue;
          const double v = uniform(rng, -1.0, 1.0);
          for (auto [a, b, c, d] : {std::array{p, q, r, s}, std::array{q, p, r, s}, std::array{p, q, s, r}, std::array{q, p, s, r},
                                    std::array{r, s, p, q}, std::array{s, r, p, q}, std::array{r, s, q, p}, std::array{s, r, q, p}})
            t(a, b, c, d) = v;
        }
  return t;
}

std::shared_ptr<const OrbitalSet> small_set(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_orbital_set(rng, n);
}

}  // namespace

TEST_CASE("determinant construction", "[wavefunctions]") {
  CHECK_THROWS_AS(Determinant({}), InvalidArgument);
  CHECK_THROWS_AS(Determinant({1, 1}), InvalidArgument);
  CHECK_THROWS_AS(Determinant({2, 1}), InvalidArgument);
  CHECK_THROWS_AS(Determinant({-1, 0}), InvalidArgument);
  int sign = 0;
  const auto d = Determinant::from_unsorted({3, 0, 2}, sign);
  CHECK(d.indices() == std::vector<int>{0, 2, 3});
  CHECK(sign == 1);  // (3 0 2) -> (0 2 3) is a 3-cycle
  Determinant::from_unsorted({1, 0, 2}, sign);
  CHECK(sign == -1);
  CHECK_THROWS_AS(Determinant::from_unsorted({1, 1}, sign), InvalidArgument);
}

TEST_CASE("excitation degree and sign", "[wavefunctions]") {
  const Determinant a({0, 1, 2}), b({0, 1, 3}), c({1, 3, 4}), e({3, 4, 5});
  CHECK(excitation(a, a).degree == 0);
  const auto ab = excitation(a, b);
  CHECK(ab.degree == 1);
  CHECK(ab.holes[0] == 2);
  CHECK(ab.particles[0] == 3);
  const auto ac = excitation(a, c);
  CHECK(ac.degree == 2);
  CHECK(ac.holes == std::array<int, 2>{0, 2});
  CHECK(ac.particles == std::array<int, 2>{3, 4});
  CHECK(excitation(a, e).degree == 3);
  CHECK_THROWS_AS(excitation(a, Determinant({0, 1})), InvalidArgument);
}

TEST_CASE("Slater-Condon elements match the antisymmetrized tensor", "[wavefunctions][oracle]") {
  std::mt19937_64 rng(21);
  for (int nel : {2, 3}) {
    const int n = 5;
    const Matrix o = random_symmetric(rng, n);
    const EriTensor g = random_kernel(rng, n);
    const auto dets = all_determinants(n, nel);
    for (const auto& d1 : dets)
      for (const auto& d2 : dets) {
        const Eigen::VectorXd v1 = oracle::wedge_tensor(d1.indices(), n), v2 = oracle::wedge_tensor(d2.indices(), n);
        const double ref1 = v1.dot(oracle::apply_one_body(v2, o, n, nel));
        const double ref2 =
            v1.dot(oracle::apply_two_body(v2, [&](int p, int r, int q, int s) { return g(p, r, q, s); }, n, nel));
        CHECK_THAT(one_body_element(d1, d2, o), WithinAbs(ref1, 1e-12));
        CHECK_THAT(two_body_element(d1, d2, g), WithinAbs(ref2, 1e-12));
        // factorized kernel a(x) a(y)
        const double ref3 = v1.dot(oracle::apply_two_body(v2, [&](int p, int r, int q, int s) { return o(p, r) * o(q, s); }, n, nel));
        CHECK_THAT(two_body_element(d1, d2, o), WithinAbs(ref3, 1e-12));
      }
  }
}

TEST_CASE("one-body operator range is checked", "[wavefunctions]") {
  CHECK_THROWS_AS(one_body_element(Determinant({0, 4}), Determinant({0, 4}), Matrix::Identity(3, 3)), InvalidArgument);
  CHECK_THROWS_AS(two_body_element(Determinant({0, 4}), Determinant({0, 4}), Matrix(Matrix::Identity(3, 3))), InvalidArgument);
}

TEST_CASE("CI state validation", "[wavefunctions]") {
  const auto set = small_set(4, 22);
  CHECK_THROWS_AS(CIState(nullptr, {CITerm{1.0, Determinant({0})}}), InvalidArgument);
  CHECK_THROWS_AS(CIState(set, {}), InvalidArgument);
  CHECK_THROWS_AS(CIState(set, {CITerm{1.0, Determinant({0, 1})}, CITerm{1.0, Determinant({0})}}), InvalidArgument);
  CHECK_THROWS_AS(CIState(set, {CITerm{1.0, Determinant({0, 1})}, CITerm{1.0, Determinant({0, 1})}}), InvalidArgument);
  CHECK_THROWS_AS(CIState::single(set, {0, 4}), InvalidArgument);
  CHECK_THROWS_AS(CIState(set, {CITerm{NAN, Determinant({0, 1})}}), InvalidArgument);
  const auto raw = std::make_shared<const OrbitalSet>(even_tempered(EvenTemperedSpec{3, 0.5, 2.0, Vec3::Zero()}));
  CHECK_THROWS_AS(CIState::single(raw, {0, 1}), InvalidArgument);
  CHECK_THROWS_AS(normalize(CIState(set, {CITerm{0.0, Determinant({0, 1})}})), InvalidArgument);
  const auto s = normalize(CIState(set, {CITerm{3.0, Determinant({0, 1})}, CITerm{4.0, Determinant({1, 2})}}));
  CHECK_THAT(s.norm(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(s.terms()[1].coefficient, WithinAbs(0.8, 1e-15));
  CHECK_FALSE(s.is_single_determinant());
}

TEST_CASE("enumerating determinants", "[wavefunctions]") {
  CHECK(all_determinants(6, 3).size() == 20);
  CHECK(all_determinants(4, 4).size() == 1);
  const auto d = all_determinants(4, 2);
  CHECK(d.front().indices() == std::vector<int>{0, 1});
  CHECK(d.back().indices() == std::vector<int>{2, 3});
  CHECK(std::is_sorted(d.begin(), d.end()));
  CHECK_THROWS_AS(all_determinants(3, 4), InvalidArgument);
  CHECK_THROWS_AS(all_determinants(3, 0), InvalidArgument);
}

TEST_CASE("one-particle density matrix", "[wavefunctions][property]") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial % 3, nel = 2 + trial % 2;
    const auto set = random_orbital_set(rng, n);
    const auto state = random_ci_state(rng, set, nel);
    const Matrix d = one_rdm(state);
    CHECK_THAT(d.trace(), WithinAbs(nel, 1e-12));
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(d);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    CHECK(eig.eigenvalues().maxCoeff() < 1.0 + 1e-12);
    const Matrix o = random_symmetric(rng, n);
    CHECK_THAT(one_body_expectation(state, o), WithinAbs((d.cwiseProduct(o)).sum(), 1e-12));
  }
}

TEST_CASE("pointwise values are antisymmetric", "[wavefunctions][property]") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const int nel = 2 + trial % 3;
    const auto set = random_orbital_set(rng, 5);
    const auto state = random_ci_state(rng, set, nel, 4);
    std::vector<Vec3> pts;
    for (int k = 0; k < nel; ++k) pts.push_back(uniform_point(rng, 1.0));
    const double v = evaluate(state, pts);
    auto swapped = pts;
    std::swap(swapped[0], swapped[nel - 1]);
    CHECK_THAT(evaluate(state, swapped), WithinAbs(-v, 1e-13));
    auto coincident = pts;
    coincident[1] = coincident[0];
    CHECK_THAT(evaluate(state, coincident), WithinAbs(0.0, 1e-13));
    // permutation-sum oracle
    const Matrix phi = set->evaluate(pts);
    double ref = 0.0;
    for (const auto& t : state.terms()) {
      Eigen::MatrixXd a(nel, nel);
      for (int r = 0; r < nel; ++r)
        for (int c = 0; c < nel; ++c) a(r, c) = phi(c, t.determinant[r]);
      ref += t.coefficient * oracle::leibniz_det(a) / std::sqrt(factorial(nel));
    }
    CHECK_THAT(v, WithinAbs(ref, 1e-13));
  }
  const auto set = small_set(3, 25);
  const auto state = CIState::single(set, {0, 1});
  CHECK_THROWS_AS(evaluate(state, std::vector<Vec3>{Vec3::Zero()}), InvalidArgument);
}

TEST_CASE("random states are reproducible", "[wavefunctions]") {
  auto r1 = trial_engine(99, "x", 3), r2 = trial_engine(99, "x", 3), r3 = trial_engine(99, "x", 4);
  const auto a = random_ci_state(r1, small_set(5, 1), 3, 4);
  const auto b = random_ci_state(r2, small_set(5, 1), 3, 4);
  const auto c = random_ci_state(r3, small_set(5, 1), 3, 4);
  REQUIRE(a.terms().size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.terms()[i].coefficient == b.terms()[i].coefficient);
    CHECK(a.terms()[i].determinant == b.terms()[i].determinant);
  }
  bool differs = false;
  for (std::size_t i = 0; i < 4; ++i) differs = differs || a.terms()[i].coefficient != c.terms()[i].coefficient;
  CHECK(differs);
}
