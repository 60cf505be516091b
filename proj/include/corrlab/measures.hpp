#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corrlab/correspondence.hpp"
#include "corrlab/sphere.hpp"

namespace corrlab {

// Empirical measure: weighted atoms on the sphere.  Weights are
// probabilities; validate() enforces the simplex invariants.
struct WeightedPointCloud {
  std::vector<SpherePoint> points;
  std::vector<double> weights;
  std::string generator;  // free-form provenance note carried in the header

  std::size_t size() const { return points.size(); }
  void validate() const;  // throws config_error on any violation

  static WeightedPointCloud equal_weights(std::vector<SpherePoint> pts,
                                          std::string generator_note);
};

void save_cloud(const std::string& path, const WeightedPointCloud& cloud);
WeightedPointCloud load_cloud(const std::string& path);

// Provenance digest (FNV-1a 64 over the serialized rows); reports record
// it so a rerun can prove it integrated the same cloud.
std::uint64_t cloud_digest(const WeightedPointCloud& cloud);

// Bounded real test functions on the sphere: the constant plus every
// monomial of total degree <= 3 in the stereographic embedding
// coordinates (x1, x2, x3).  Every member has sup norm <= 1.
class TestDictionary {
 public:
  TestDictionary();

  std::size_t size() const { return exponents_.size(); }
  std::array<int, 3> exponents(std::size_t k) const { return exponents_[k]; }
  std::string name(std::size_t k) const;

  double eval(std::size_t k, const SpherePoint& z) const;
  // Evaluates every member at once; out is resized to size().
  void eval_all(const SpherePoint& z, std::vector<double>& out) const;

  // The embedding itself; stable across the whole range of |z|.
  static std::array<double, 3> embed(const SpherePoint& z);

 private:
  std::vector<std::array<int, 3>> exponents_;
};

// Sampling controls shared by the Monte Carlo operations.  Streams are
// owned per fixed-size chunk of work, so results are bit-identical for
// any thread count.
struct SampleParams {
  std::uint64_t seed = 0;
  int threads = 1;
  int retry_cap = 5;  // per-walk numeric retries before giving up
};

// Runs body(chunk) for chunk = 0..n_chunks-1 on up to `threads` threads.
// Exceptions from any chunk are rethrown on the caller's thread.
void parallel_chunks(int n_chunks, int threads,
                     const std::function<void(int)>& body);

// (1/d^n)(F^n)* applied to the Dirac mass at z, materialized exactly.
// Throws cap_exceeded when the preimage tree would exceed `cap` leaves.
WeightedPointCloud pullback_dirac_exact(const PolyCorrespondence& corr,
                                        const SpherePoint& z, int n,
                                        std::size_t cap = 1u << 20);

// Unbiased sampled stand-in: `samples` independent length-n backward
// random walks, each step uniform among the d preimages counted with
// multiplicity.
WeightedPointCloud pullback_dirac_sampled(const PolyCorrespondence& corr,
                                          const SpherePoint& z, int n,
                                          std::size_t samples,
                                          const SampleParams& params);

// Pullback-invariant measure estimate: the sampled cloud together with
// its invariance residual and any start-point diagnostics.
struct DsEstimate {
  WeightedPointCloud cloud;
  double invariance_residual = 0.0;
  std::vector<std::string> warnings;
};

DsEstimate estimate_ds_measure(const PolyCorrespondence& corr,
                               const SpherePoint& start, int depth,
                               std::size_t samples,
                               const SampleParams& params);

// Exact sampler for normalized log-Lebesgue measure on 1 <= |z| <= 2:
// z = e^{x + i theta}, x uniform on [0, log 2], theta uniform on [0, 2pi).
WeightedPointCloud sample_annulus_measure(std::size_t samples,
                                          const SampleParams& params);

// max over the dictionary of |(1/d) sum_k w_k sum_{v in Fdag(z_k)} phi(v)
//                              - sum_k w_k phi(z_k)|.
double invariance_residual(const PolyCorrespondence& corr,
                           const WeightedPointCloud& cloud,
                           const TestDictionary& dict);

// max over the dictionary of |int phi da - int phi db|.
double weak_star_discrepancy(const WeightedPointCloud& a,
                             const WeightedPointCloud& b,
                             const TestDictionary& dict);

using SetPredicate = std::function<bool(const SpherePoint&)>;

// Weighted fraction of the cloud inside the set.
double measure_of_set(const WeightedPointCloud& cloud, const SetPredicate& in_set);

// z in F^j(A)  <=>  some point of the depth-j backward tree of z lies in A.
// Walks the tree depth-first and stops at the first witness.
bool forward_set_membership(const PolyCorrespondence& corr,
                            const SpherePoint& z, int j,
                            const SetPredicate& in_set,
                            std::size_t cap = 1u << 20);

}  // namespace corrlab
