// Acceptance suite: ten numbered criteria, one PASS/FAIL line each, exit
// status 0 only if every criterion holds.  Tolerances and horizons are the
// pinned contract values; each line carries the measured quantities and
// elapsed time so a failing run is diagnosable from the log alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corrlab/cli.hpp"
#include "corrlab/correspondence.hpp"
#include "corrlab/ergostats.hpp"
#include "corrlab/errors.hpp"
#include "corrlab/finite.hpp"
#include "corrlab/matching.hpp"
#include "corrlab/measures.hpp"
#include "corrlab/rng.hpp"
#include "corrlab/sphere.hpp"
#include "helpers.hpp"

using namespace corrlab;
using corrlab::testing::make_circle_cloud;
using corrlab::testing::make_semigroup;
using corrlab::testing::make_squaring;

namespace {

constexpr std::uint64_t kTagAcceptance = 0xacc3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Shared expensive intermediates (built once, reused across criteria).
struct Shared {
  std::optional<WeightedPointCloud> annulus_100k;
  std::optional<DsEstimate> semi_estimate;
};
Shared g;

const WeightedPointCloud& annulus_100k() {
  if (!g.annulus_100k) {
    SampleParams sp;
    sp.seed = 101;
    g.annulus_100k = sample_annulus_measure(100000, sp);
  }
  return *g.annulus_100k;
}

const DsEstimate& semi_estimate() {
  if (!g.semi_estimate) {
    SampleParams sp;
    sp.seed = 102;
    sp.threads = 2;
    g.semi_estimate =
        estimate_ds_measure(make_semigroup(), SpherePoint(3.0, 0.0), 25,
                            100000, sp);
  }
  return *g.semi_estimate;
}

// A = {|z| > sqrt(2)}, the worked example's test set (infinity included).
bool in_outer_annulus(const SpherePoint& p) {
  return p.at_infinity || std::abs(p.value) > std::sqrt(2.0);
}

// ---------------------------------------------------------------------

// 1. mu(A) for A = {|z| > sqrt 2}: exact annulus sampler in [0.49, 0.51];
//    the sampled balanced measure of <z^2, z^2/2> agrees within 0.03.
bool criterion_annulus_measure(std::string& detail) {
  const double exact = measure_of_set(annulus_100k(), in_outer_annulus);
  const double sampled = measure_of_set(semi_estimate().cloud,
                                        in_outer_annulus);
  const double diff = std::abs(sampled - exact);
  detail = "exact=" + fmt(exact) + " ds=" + fmt(sampled) +
           " |diff|=" + fmt(diff);
  return exact >= 0.49 && exact <= 0.51 && diff <= 0.03;
}

// 2. Strict inequality: (1/8) sum_{j<8} mu(F^j(A) cap A) >= 0.45 > mu(A)^2.
bool criterion_strict_inequality(std::string& detail) {
  SampleParams sp;
  sp.seed = 201;
  const WeightedPointCloud cloud = sample_annulus_measure(10000, sp);
  const PolyCorrespondence semi = make_semigroup();
  const double mu_a = measure_of_set(cloud, in_outer_annulus);

  double cesaro = 0.0;
  for (int j = 0; j < 8; ++j) {
    double mj = 0.0;
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      if (!in_outer_annulus(cloud.points[k])) continue;
      if (forward_set_membership(semi, cloud.points[k], j, in_outer_annulus))
        mj += cloud.weights[k];
    }
    cesaro += mj;
  }
  cesaro /= 8.0;
  const double bound = mu_a * mu_a;
  detail = "cesaro_8=" + fmt(cesaro) + " mu(A)^2=" + fmt(bound);
  return cesaro >= 0.45 && cesaro > bound;
}

// 3. Mixing of z^2 on the circle: |I_n - target| <= 0.03 for n in [10, 20]
//    over the first four harmonics (real and imaginary parts).  One shared
//    set of backward walks serves every function and horizon.
bool criterion_squaring_mixing(std::string& detail) {
  constexpr int kPoints = 10000, kWalks = 8, kMin = 10, kMax = 20;
  const PolyCorrespondence sq = make_squaring();
  const WeightedPointCloud cloud = make_circle_cloud(kPoints, 301);

  std::vector<RealFn> fns;
  for (int k = 1; k <= 4; ++k) {
    fns.push_back(parse_function_spec("fourier:" + std::to_string(k) + ":re"));
    fns.push_back(parse_function_spec("fourier:" + std::to_string(k) + ":im"));
  }
  const std::size_t nf = fns.size();
  const int levels = kMax - kMin + 1;

  // uhat[(f * levels + l) * kPoints + i] ~ (U^(kMin+l) f)(z_i)
  std::vector<double> uhat(nf * levels * kPoints, 0.0);
  for (int i = 0; i < kPoints; ++i) {
    RandomStream rs(302, static_cast<std::uint64_t>(i), kTagAcceptance);
    for (int w = 0; w < kWalks; ++w) {
      SpherePoint p = cloud.points[static_cast<std::size_t>(i)];
      for (int step = 1; step <= kMax; ++step) {
        const std::vector<SpherePoint> img = backward_image(sq, p);
        p = img[rs.uniform_below(img.size())];
        if (step < kMin) continue;
        const std::size_t l = static_cast<std::size_t>(step - kMin);
        for (std::size_t f = 0; f < nf; ++f)
          uhat[(f * levels + l) * kPoints + static_cast<std::size_t>(i)] +=
              fns[f](p);
      }
    }
  }
  for (double& v : uhat) v /= kWalks;

  std::vector<double> integral(nf, 0.0);
  std::vector<std::vector<double>> fvals(nf, std::vector<double>(kPoints));
  for (std::size_t f = 0; f < nf; ++f)
    for (int i = 0; i < kPoints; ++i) {
      fvals[f][static_cast<std::size_t>(i)] =
          fns[f](cloud.points[static_cast<std::size_t>(i)]);
      integral[f] += cloud.weights[static_cast<std::size_t>(i)] *
                     fvals[f][static_cast<std::size_t>(i)];
    }

  double worst = 0.0;
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t gfn = 0; gfn < nf; ++gfn) {
      const double target = integral[f] * integral[gfn];
      for (int l = 0; l < levels; ++l) {
        double corr_n = 0.0;
        for (int i = 0; i < kPoints; ++i)
          corr_n += cloud.weights[static_cast<std::size_t>(i)] *
                    uhat[(f * levels + static_cast<std::size_t>(l)) * kPoints +
                         static_cast<std::size_t>(i)] *
                    fvals[gfn][static_cast<std::size_t>(i)];
        worst = std::max(worst, std::abs(corr_n - target));
      }
    }
  detail = "max|I_n - target|=" + fmt(worst) + " over " +
           std::to_string(nf * nf) + " pairs, n in [10,20]";
  return worst <= 0.03;
}

// 4. Koopman contraction: 100 random dictionary combinations, q in {1, 2},
//    both worked correspondences on their invariant clouds.
bool criterion_contraction(std::string& detail) {
  const PolyCorrespondence sq = make_squaring();
  const PolyCorrespondence semi = make_semigroup();
  const WeightedPointCloud circle = make_circle_cloud(50000, 401);
  const WeightedPointCloud& annulus = annulus_100k();

  TestDictionary dict;
  RandomStream rs(402, 0, kTagAcceptance);
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> coef(dict.size());
    for (double& c : coef) c = rs.uniform(-1.0, 1.0);
    const RealFn phi = [&dict, &coef](const SpherePoint& p) {
      std::vector<double> vals;
      dict.eval_all(p, vals);
      double acc = 0.0;
      for (std::size_t m = 0; m < vals.size(); ++m) acc += coef[m] * vals[m];
      return acc;
    };
    for (const double q : {1.0, 2.0}) {
      const auto [lc, rc] = contraction_check(sq, circle, phi, q);
      const auto [ls, rsn] = contraction_check(semi, annulus, phi, q);
      worst_ratio = std::max({worst_ratio, lc / rc, ls / rsn});
      if (lc > rc * 1.01 || ls > rsn * 1.01) {
        detail = "violated at trial " + std::to_string(trial) +
                 " q=" + fmt(q) + " ratios " + fmt(lc / rc) + ", " +
                 fmt(ls / rsn);
        return false;
      }
    }
  }
  detail = "worst ||U phi||_q / ||phi||_q = " + fmt(worst_ratio) +
           " over 100 trials";
  return true;
}

// 5. Invariance residual of the estimated balanced-measure clouds <= 0.02.
bool criterion_invariance_residual(std::string& detail) {
  SampleParams sp;
  sp.seed = 501;
  sp.threads = 2;
  const DsEstimate sq_est = estimate_ds_measure(
      make_squaring(), SpherePoint(3.0, 0.0), 25, 100000, sp);
  const DsEstimate& semi_est = semi_estimate();
  detail = "residuals: squaring=" + fmt(sq_est.invariance_residual) +
           " semigroup=" + fmt(semi_est.invariance_residual);
  return sq_est.invariance_residual <= 0.02 &&
         semi_est.invariance_residual <= 0.02;
}

// 6. Composition oracle: backward images of compose(G, G) match two-step
//    backward images under bottleneck multiset matching, error <= 1e-6.
bool criterion_composition(std::string& detail) {
  double worst = 0.0;
  for (const bool use_semi : {false, true}) {
    const PolyCorrespondence gamma =
        use_semi ? make_semigroup() : make_squaring();
    const PolyCorrespondence gamma2 = compose(gamma, gamma);
    RandomStream rs(601, use_semi ? 1 : 0, kTagAcceptance);
    for (int trial = 0; trial < 20; ++trial) {
      const SpherePoint w(rs.uniform(-2.0, 2.0), rs.uniform(-2.0, 2.0));
      const std::vector<SpherePoint> direct = backward_image(gamma2, w);
      const std::vector<SpherePoint> two_step = iterate_backward(gamma, w, 2);
      worst = std::max(worst, bottleneck_match_distance(direct, two_step));
    }
  }
  detail = "max chordal matching error=" + fmt(worst) +
           " over 2x20 random points";
  return worst <= 1e-6;
}

// 7. Finite-model theorem fuzzing: hierarchy on 1000 instances (m <= 5),
//    main theorem on 200 instances (m <= 4), plus the frozen swap verdicts.
bool criterion_finite_fuzz(std::string& detail) {
  RandomStream rs(701, 0, kTagAcceptance);
  int hierarchy_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rs.uniform_below(4));  // 2..5
    const int d = 1 + static_cast<int>(rs.uniform_below(4));  // 1..4
    const FiniteInstance inst = random_finite_instance(m, d, rs);
    if (check_hierarchy(inst.fc, inst.mu).consistent) ++hierarchy_ok;
  }
  int main_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + static_cast<int>(rs.uniform_below(3));  // 2..4
    const int d = 1 + static_cast<int>(rs.uniform_below(3));  // 1..3
    const FiniteInstance inst = random_finite_instance(m, d, rs);
    if (check_main_theorem(inst.fc, inst.mu).consistent) ++main_ok;
  }

  const FiniteCorrespondence swap =
      FiniteCorrespondence::create({{0, 1}, {1, 0}});
  const FiniteMeasure mu = invariant_measures(swap).front();
  const HierarchyCheck hier = check_hierarchy(swap, mu);
  const MainTheoremCheck main_check = check_main_theorem(swap, mu);
  const bool swap_ok = hier.ergodic && !main_check.weak_mixing &&
                       !main_check.product_ergodic;

  detail = "hierarchy " + std::to_string(hierarchy_ok) +
           "/1000, main theorem " + std::to_string(main_ok) +
           "/200, swap verdicts " + (swap_ok ? "as worked" : "WRONG");
  return hierarchy_ok == 1000 && main_ok == 200 && swap_ok;
}

// 8. Product invariance is exact: defect <= 1e-9 on 100 random factor
//    pairs, n <= 5.
bool criterion_product_invariance(std::string& detail) {
  RandomStream rs(801, 0, kTagAcceptance);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int ma = 2 + static_cast<int>(rs.uniform_below(3));
    const int mb = 2 + static_cast<int>(rs.uniform_below(3));
    const int da = 1 + static_cast<int>(rs.uniform_below(3));
    const int db = 1 + static_cast<int>(rs.uniform_below(3));
    const FiniteInstance a = random_finite_instance(ma, da, rs);
    const FiniteInstance b = random_finite_instance(mb, db, rs);
    const int n = 1 + static_cast<int>(rs.uniform_below(5));
    worst = std::max(worst,
                     check_product_invariance(a.fc, b.fc, a.mu, b.mu, n));
  }
  detail = "max pullback defect=" + fmt(worst) + " over 100 pairs, n<=5";
  return worst <= 1e-9;
}

// 9. Ergodicity as average mixing: decider agreement on 500 instances.
bool criterion_average_mixing(std::string& detail) {
  RandomStream rs(901, 0, kTagAcceptance);
  int agree = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + static_cast<int>(rs.uniform_below(4));
    const int d = 1 + static_cast<int>(rs.uniform_below(4));
    const FiniteInstance inst = random_finite_instance(m, d, rs);
    if (check_average_mixing_equivalence(inst.fc, inst.mu)) ++agree;
  }
  detail = "agreement " + std::to_string(agree) + "/500";
  return agree == 500;
}

// 10. Density-zero machinery on the three constructed families at horizon
//     1e4.  Each family must get its specified verdict, and the three
//     characterizations (Cesaro of |a_j|, density-zero filtered limit,
//     Cesaro of |a_j|^2, all against tolerance 1e-2) must agree.
bool criterion_density_zero(std::string& detail) {
  constexpr int kHorizon = 10000;
  constexpr double kTol = 1e-2;
  const double target = 0.3;

  struct Family {
    const char* name;
    std::function<double(int)> term;
    bool expect_weak_mixing;
  };
  const std::vector<Family> families = {
      {"convergent", [&](int j) { return target + 0.5 / (j + 1.0); }, true},
      {"oscillation",
       [&](int j) { return target + (j % 2 == 0 ? 0.5 : -0.5); }, false},
      {"square-spikes",
       [&](int j) {
         const int r = static_cast<int>(std::lround(std::sqrt(double(j))));
         return target + (r * r == j ? 0.5 : 0.0);
       },
       true},
  };

  std::string verdicts;
  for (const Family& fam : families) {
    std::vector<double> seq(kHorizon);
    double abs_mean = 0.0, sq_mean = 0.0;
    for (int j = 0; j < kHorizon; ++j) {
      seq[static_cast<std::size_t>(j)] = fam.term(j);
      const double dev = std::abs(fam.term(j) - target);
      abs_mean += dev;
      sq_mean += dev * dev;
    }
    abs_mean /= kHorizon;
    sq_mean /= kHorizon;

    const DensityZeroVerdict verdict = density_zero_filter(seq, target, kTol);
    const bool via_abs = abs_mean <= kTol;
    const bool via_filter = verdict.weak_mixing_consistent &&
                            std::abs(verdict.filtered_limit - target) <= kTol;
    const bool via_sq = sq_mean <= kTol;

    verdicts += std::string(fam.name) + "=" +
                (verdict.weak_mixing_consistent ? "T" : "F") + " ";
    if (verdict.weak_mixing_consistent != fam.expect_weak_mixing ||
        via_abs != via_filter || via_filter != via_sq) {
      detail = verdicts + "(three-way equivalence broken on " + fam.name +
               ": abs=" + fmt(abs_mean) + " sq=" + fmt(sq_mean) + ")";
      return false;
    }
  }
  detail = verdicts + "three-way equivalence holds at horizon 1e4";
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*body)(std::string&);
  };
  const std::vector<Criterion> criteria = {
      {"annulus measure (exact vs balanced-measure estimate)",
       criterion_annulus_measure},
      {"strict Cesaro inequality on the worked example",
       criterion_strict_inequality},
      {"mixing of z^2 across harmonics 1..4", criterion_squaring_mixing},
      {"Koopman contraction on random dictionary functions",
       criterion_contraction},
      {"invariance residual of estimated measures",
       criterion_invariance_residual},
      {"composition oracle under bottleneck matching",
       criterion_composition},
      {"finite-model hierarchy and main-theorem fuzzing",
       criterion_finite_fuzz},
      {"product invariance exactness", criterion_product_invariance},
      {"ergodicity as average mixing", criterion_average_mixing},
      {"density-zero filter and its equivalences", criterion_density_zero},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[k].body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("C%02zu %s  %s: %s  [%.1fs]\n", k + 1, ok ? "PASS" : "FAIL",
                criteria[k].name, detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n",
              criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures == 0 ? 0 : 1;
}
