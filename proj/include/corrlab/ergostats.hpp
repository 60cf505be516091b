#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corrlab/correspondence.hpp"
#include "corrlab/measures.hpp"
#include "corrlab/sphere.hpp"

namespace corrlab {

using RealFn = std::function<double(const SpherePoint&)>;

// Controls for the Koopman-iterate estimators.  The exact backward tree is
// used while d^n stays within `cap`; past that the estimate switches to
// `walks` independent backward walks per evaluation point (unbiased, with
// a recorded standard error) unless sampling is disallowed.
struct KoopmanOptions {
  std::size_t cap = 1000000;
  int walks = 256;
  bool allow_sampled = true;
  std::uint64_t stream_id = 0;  // per-point stream when called in bulk
  SampleParams sample;
};

struct KoopmanResult {
  double value = 0.0;
  bool sampled = false;
  double standard_error = 0.0;  // zero in exact mode
};

// (U_F phi)(z) = (1/d) sum over F-dagger(z) with multiplicity of phi.
double koopman_apply(const PolyCorrespondence& corr, const RealFn& phi,
                     const SpherePoint& z);

// (U_F^n phi)(z): mean of phi over the depth-n backward tree.
KoopmanResult koopman_iterate(const PolyCorrespondence& corr,
                              const RealFn& phi, const SpherePoint& z, int n,
                              const KoopmanOptions& opt = {});

// I_n(phi, psi) = integral of (U^n phi) * psi against the cloud.
double correlation(const PolyCorrespondence& corr,
                   const WeightedPointCloud& mu, const RealFn& phi,
                   const RealFn& psi, int n, const KoopmanOptions& opt = {});

// Output of density_zero_filter: the constructive finite-horizon form of
// the Koopman-von Neumann equivalence.  `excluded` holds the indices where
// |seq_j - target| > window_tol; the verdict asks that their running
// density trend below 0.2 over the final third of the horizon.
struct DensityZeroVerdict {
  std::vector<int> excluded;
  double filtered_limit = 0.0;       // mean of seq over the complement
  double complement_dev_mean = 0.0;  // mean |seq_j - target| off the set
  double excluded_density = 0.0;     // |excluded| / horizon
  bool weak_mixing_consistent = false;
};

DensityZeroVerdict density_zero_filter(const std::vector<double>& seq,
                                       double target, double window_tol);

// Full correlation instrument record for one (mu, phi, psi) triple.
struct CorrelationReport {
  std::vector<double> series;           // I_j, j = 0..horizon
  double target = 0.0;                  // I(phi) * I(psi)
  std::vector<double> cesaro_means;     // running means of I_j
  std::vector<double> cesaro_abs_devs;  // running means of |I_j - target|
  std::vector<double> standard_errors;  // per-term MC errors (empty if exact)

  bool density_zero_evaluated = false;  // horizon >= 20 required
  DensityZeroVerdict density_zero;
  double window_tol = 0.0;  // the width the filter actually used

  // Provenance: enough to reproduce the run bit for bit.
  std::string label;
  int horizon = 0;
  bool sampled = false;
  std::uint64_t seed = 0;
  std::size_t cap = 0;
  int walks = 0;
  std::uint64_t mu_digest = 0;
};

struct ReportOptions {
  std::size_t cap = 1000000;
  int walks = 256;
  // Density-filter width; <= 0 means automatic:
  // max(0.01, 3 * mean standard error).
  double window_tol = 0.0;
  SampleParams sample;
};

CorrelationReport correlation_report(const PolyCorrespondence& corr,
                                     const WeightedPointCloud& mu,
                                     const RealFn& phi, const RealFn& psi,
                                     int n_max, const ReportOptions& opt = {});

void save_report(const std::string& path, const CorrelationReport& report);
CorrelationReport load_report(const std::string& path);

// Finite-horizon mixing => weak mixing => ergodicity bookkeeping: the
// triangle inequality |cesaro_means[n] - target| <= cesaro_abs_devs[n]
// must hold at every n, and whenever the whole series sits within tol of
// the target both Cesaro statistics must close out within tol as well.
bool hierarchy_signatures_consistent(const CorrelationReport& report,
                                     double tol);

// First n Birkhoff partial averages (1/m) sum_{j<m} (U^j phi)(z), m = 1..n.
std::vector<double> birkhoff_average(const PolyCorrespondence& corr,
                                     const RealFn& phi, const SpherePoint& z,
                                     int n, const KoopmanOptions& opt = {});

// Running arithmetic means.  Errors on an empty input.
std::vector<double> cesaro(const std::vector<double>& seq);

// (||U_F phi||_q, ||phi||_q) against the cloud, for asserting the Koopman
// contraction property.
std::pair<double, double> contraction_check(const PolyCorrespondence& corr,
                                            const WeightedPointCloud& mu,
                                            const RealFn& phi, double q);

// Product-side correlation series for separable data on F1 x F2: the two
// clouds are zipped pairwise (they must be independent samples of the
// factor measures and equally long), and each estimate advances the two
// coordinates of a genuine product backward walk together, so the Fubini
// factorization holds only statistically - which is what the check below
// is for.
std::vector<double> product_correlation_series(
    const PolyCorrespondence& corr1, const WeightedPointCloud& mu1,
    const RealFn& phi1, const RealFn& psi1, const PolyCorrespondence& corr2,
    const WeightedPointCloud& mu2, const RealFn& phi2, const RealFn& psi2,
    int n_max, const ReportOptions& opt = {});

// max_n |product_series[n] - left.series[n] * right.series[n]|.
// Errors when the horizons disagree.
double product_correlation_factorization_check(
    const CorrelationReport& left, const CorrelationReport& right,
    const std::vector<double>& product_series);

}  // namespace corrlab
