// Root solver, chordal metric and random-stream oracles.  Expected values
// are frozen by hand (projective root counts, exact chordal distances) or
// checked against independently reconstructed polynomials.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "corrlab/errors.hpp"
#include "corrlab/matching.hpp"
#include "corrlab/rng.hpp"
#include "corrlab/roots.hpp"
#include "corrlab/sphere.hpp"

using namespace corrlab;

namespace {

ComplexPolynomial poly(std::initializer_list<Complex> ascending) {
  return ComplexPolynomial{std::vector<Complex>(ascending)};
}

// Monic polynomial with the given roots, coefficients ascending.
ComplexPolynomial from_roots(const std::vector<Complex>& roots) {
  std::vector<Complex> c{1.0};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, Complex{});
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = next;
  }
  return ComplexPolynomial{c};
}

int count_infinite(const std::vector<SpherePoint>& pts) {
  return static_cast<int>(
      std::count_if(pts.begin(), pts.end(),
                    [](const SpherePoint& p) { return p.at_infinity; }));
}

}  // namespace

TEST_CASE("chordal metric frozen values") {
  const SpherePoint zero(0.0, 0.0);
  const SpherePoint one(1.0, 0.0);
  const SpherePoint inf = SpherePoint::infinity();

  CHECK(chordal_distance(zero, inf) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(chordal_distance(one, one) == doctest::Approx(0.0));
  CHECK(chordal_distance(zero, one) ==
        doctest::Approx(1.4142135623730951).epsilon(1e-14));
  CHECK(chordal_distance(inf, inf) == 0.0);
  // Antipodal pair z and -1/conj(z) realizes the diameter 2.
  const SpherePoint p(0.3, -0.7);
  const SpherePoint anti(-1.0 / std::conj(p.value));
  CHECK(chordal_distance(p, anti) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("chordal metric axioms on random triples") {
  RandomStream rs(17, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    auto draw = [&]() -> SpherePoint {
      const double kind = rs.uniform01();
      if (kind < 0.05) return SpherePoint::infinity();
      const double scale = std::pow(10.0, rs.uniform(-3.0, 3.0));
      return SpherePoint(scale * rs.normal(), scale * rs.normal());
    };
    const SpherePoint a = draw(), b = draw(), c = draw();
    const double dab = chordal_distance(a, b);
    const double dba = chordal_distance(b, a);
    const double dac = chordal_distance(a, c);
    const double dcb = chordal_distance(c, b);
    CHECK(dab >= 0.0);
    CHECK(dab <= 2.0 + 1e-12);
    CHECK(dab == doctest::Approx(dba).epsilon(1e-14));
    CHECK(dab <= dac + dcb + 1e-12);
  }
}

TEST_CASE("poly_roots closed-form oracles") {
  // z^2 - 1 -> {1, -1}
  auto r = poly_roots(poly({-1.0, 0.0, 1.0}));
  REQUIRE(r.size() == 2);
  std::vector<SpherePoint> expect{SpherePoint(1.0, 0.0), SpherePoint(-1.0, 0.0)};
  CHECK(bottleneck_match_distance(r, expect) <= 1e-12);

  // z^2 -> double root at 0 (merged cluster, both copies identical)
  r = poly_roots(poly({0.0, 0.0, 1.0}));
  REQUIRE(r.size() == 2);
  CHECK(r[0].finite());
  CHECK(r[0].value == r[1].value);
  CHECK(std::abs(r[0].value) <= 1e-12);

  // linear: 3z + 6 -> -2
  r = poly_roots(poly({6.0, 3.0}));
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0].value - Complex(-2.0, 0.0)) <= 1e-14);

  // constant: no roots, nominal degree 0
  r = poly_roots(poly({5.0}));
  CHECK(r.empty());
}

TEST_CASE("poly_roots projective counting at infinity") {
  // Coefficient list [-1, 0, 0] has nominal degree 2 but effective degree 0:
  // both roots live at infinity.
  auto r = poly_roots(poly({-1.0, 0.0, 0.0}));
  REQUIRE(r.size() == 2);
  CHECK(count_infinite(r) == 2);

  // One degenerate leading coefficient: z + 1 padded to nominal degree 2.
  r = poly_roots(poly({1.0, 1.0, 0.0}));
  REQUIRE(r.size() == 2);
  CHECK(count_infinite(r) == 1);
  const auto finite_it =
      std::find_if(r.begin(), r.end(),
                   [](const SpherePoint& p) { return p.finite(); });
  REQUIRE(finite_it != r.end());
  CHECK(std::abs(finite_it->value - Complex(-1.0, 0.0)) <= 1e-12);
}

TEST_CASE("poly_roots rejects the zero polynomial") {
  CHECK_THROWS_AS(poly_roots(poly({0.0, 0.0, 0.0})), numeric_error);
  CHECK_THROWS_AS(poly_roots(ComplexPolynomial{}), numeric_error);
}

TEST_CASE("root round trip: random monic polynomials, degree <= 12") {
  RandomStream rs(4242, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int deg = 1 + static_cast<int>(rs.uniform_below(12));
    // Well-separated roots in an annulus: rejection keeps pairwise distance
    // above 1e-2 so the round-trip tolerance is meaningful.
    std::vector<Complex> roots;
    while (static_cast<int>(roots.size()) < deg) {
      const Complex cand =
          std::polar(rs.uniform(0.2, 2.0), rs.uniform(0.0, 6.2831853));
      bool ok = true;
      for (const Complex& r : roots)
        if (std::abs(r - cand) < 1e-2) ok = false;
      if (ok) roots.push_back(cand);
    }
    const ComplexPolynomial p = from_roots(roots);
    const auto computed = poly_roots(p);
    REQUIRE(computed.size() == roots.size());
    std::vector<SpherePoint> expected;
    for (const Complex& r : roots) expected.emplace_back(r);
    // Relative error 1e-8 on points of modulus <= 2 is chordal <= 2e-8.
    CHECK(bottleneck_match_distance(computed, expected) <= 2e-8);
  }
}

TEST_CASE("multiplicity conservation under degenerate leading coefficients") {
  RandomStream rs(99, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const int deg = 1 + static_cast<int>(rs.uniform_below(8));
    const int pad = static_cast<int>(rs.uniform_below(3));
    std::vector<Complex> c(static_cast<std::size_t>(deg + pad + 1), Complex{});
    for (int i = 0; i <= deg; ++i)
      c[static_cast<std::size_t>(i)] = Complex(rs.normal(), rs.normal());
    if (std::abs(c[static_cast<std::size_t>(deg)]) < 0.1)
      c[static_cast<std::size_t>(deg)] = 1.0;  // keep effective degree
    const ComplexPolynomial p{c};
    const auto r = poly_roots(p);
    CHECK(static_cast<int>(r.size()) == deg + pad);
    CHECK(count_infinite(r) >= pad);
  }
}

TEST_CASE("double root stays merged") {
  // (z - 1)^2 (z + 2): the double root must come back as two equal points.
  const ComplexPolynomial p = from_roots({1.0, 1.0, -2.0});
  const auto r = poly_roots(p);
  REQUIRE(r.size() == 3);
  int ones = 0;
  std::set<std::pair<double, double>> distinct;
  for (const auto& pt : r) {
    if (std::abs(pt.value - Complex(1.0, 0.0)) < 1e-6) ++ones;
    distinct.insert({pt.value.real(), pt.value.imag()});
  }
  CHECK(ones == 2);
  CHECK(distinct.size() == 2);  // merged copies are bitwise identical
}

TEST_CASE("seeded streams: determinism and independence") {
  RandomStream a(7, 0), b(7, 0), c(7, 1);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // First draws differ across streams for virtually every seed.
  int diff = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    RandomStream s0(seed, 0), s1(seed, 1);
    if (s0.next_u64() != s1.next_u64()) ++diff;
  }
  CHECK(diff == 1000);
}

TEST_CASE("seeded streams: uniform statistics") {
  RandomStream rs(123, 5);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rs.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.01);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.01);

  // uniform_below covers its range without obvious bias.
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rs.uniform_below(7)];
  for (int k = 0; k < 7; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}

TEST_CASE("residual acceptance rejects a rigged non-convergent solve") {
  // An extremely tight tolerance with zero refinement budget must trip the
  // residual gate and surface the best residual in the message.
  RootSolverOptions opt;
  opt.tol = 1e-300;
  opt.max_iterations = 0;
  const ComplexPolynomial p =
      from_roots({Complex(0.5, 0.1), Complex(-0.3, 0.9), Complex(1.1, -0.4),
                  Complex(-0.8, -0.2)});
  CHECK_THROWS_AS(poly_roots(p, opt), numeric_error);
}
