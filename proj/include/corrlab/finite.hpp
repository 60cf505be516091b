#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrlab/rng.hpp"

namespace corrlab {

// Finite-state model of a correspondence: M[i][j] is the multiplicity of
// state j inside F(i), equivalently of i inside F(j)-dagger, so F(i) reads
// off row i and F-dagger(j) reads off column j.  Every column sums to the
// topological degree d (the finite analogue of the constant preimage
// count); row sums form the forward-degree profile and may vary.
struct FiniteCorrespondence {
  int m = 0;
  int d = 0;
  std::vector<std::vector<int>> M;
  std::vector<int> row_sums;

  // Validates squareness, nonnegativity, nonzero rows/columns, and the
  // constant column sum; throws config_error on any violation.
  static FiniteCorrespondence create(std::vector<std::vector<int>> entries);
};

struct FiniteMeasure {
  std::vector<double> mu;
  std::vector<int> support;  // indices with mu[i] > 1e-14

  // Validates nonnegativity and exact normalization (1e-12).
  static FiniteMeasure from_vector(std::vector<double> v);
};

// (F*v)(w) = sum_z M[w][z] v(z), the matrix-vector product M v.
std::vector<double> pullback(const FiniteCorrespondence& fc,
                             const std::vector<double>& v);

// Extreme points of {mu >= 0, sum mu = 1, M mu = d mu}: one Perron vector
// per closed communicating class of the backward chain.  Never empty.
std::vector<FiniteMeasure> invariant_measures(const FiniteCorrespondence& fc);

// A[z][w] = M[w][z] / d; rows sum to 1 (constants are fixed).
std::vector<std::vector<double>> koopman_matrix(const FiniteCorrespondence& fc);

// I_n(phi, psi) = <A^n phi, psi>_mu, exactly.  mu must be invariant
// (tolerance 1e-10) or the call is rejected.
double correlation_exact(const FiniteCorrespondence& fc,
                         const FiniteMeasure& mu,
                         const std::vector<double>& phi,
                         const std::vector<double>& psi, int n);

// Almost invariance: some B' differing from B only by mu-null atoms has
// F-dagger(B') inside B.  Removing null atoms only shrinks the backward
// image, so the minimal candidate B' = B intersect supp(mu) decides.
bool is_almost_invariant(const FiniteCorrespondence& fc,
                         const FiniteMeasure& mu, const std::vector<int>& B);

// Full subset enumeration: true iff every almost-invariant B has
// mu(B) in {0, 1}.  Throws cap_exceeded when m exceeds the cap.
bool is_ergodic(const FiniteCorrespondence& fc, const FiniteMeasure& mu,
                int cap = 20);

// Decided exactly on support(mu) two independent ways - spectral radius
// of A - P against peripheral spectrum, and definitional evaluation of
// the correlation defects out to a far horizon - which must agree (a
// disagreement throws numeric_error; it would mean a bug, not a theorem
// failure).  On finite state spaces the two notions coincide.
bool is_mixing(const FiniteCorrespondence& fc, const FiniteMeasure& mu);
bool is_weak_mixing(const FiniteCorrespondence& fc, const FiniteMeasure& mu);

// Kronecker product model of F1 x F2; degree d1*d2.  Throws cap_exceeded
// when the product state count would exceed cap_states.
FiniteCorrespondence kron_product(const FiniteCorrespondence& a,
                                  const FiniteCorrespondence& b,
                                  int cap_states = 400);

// (outer o inner)(i) multiplicities are sum_k M_in[i][k] * M_out[k][j];
// degrees multiply, column sums stay constant.
FiniteCorrespondence finite_compose(const FiniteCorrespondence& outer,
                                    const FiniteCorrespondence& inner);

// max-norm defect of ((F1 x F2)^n)* (mu_a x mu_b) = d1^n d2^n (mu_a x mu_b).
double check_product_invariance(const FiniteCorrespondence& a,
                                const FiniteCorrespondence& b,
                                const FiniteMeasure& mu_a,
                                const FiniteMeasure& mu_b, int n);

// F weak mixing <=> F x F ergodic <=> F x F weak mixing.
struct MainTheoremCheck {
  bool weak_mixing = false;
  bool product_ergodic = false;
  bool product_weak_mixing = false;
  bool consistent = false;
};
MainTheoremCheck check_main_theorem(const FiniteCorrespondence& fc,
                                    const FiniteMeasure& mu);

// mixing => weak mixing => ergodic.
struct HierarchyCheck {
  bool mixing = false;
  bool weak_mixing = false;
  bool ergodic = false;
  bool consistent = false;
};
HierarchyCheck check_hierarchy(const FiniteCorrespondence& fc,
                               const FiniteMeasure& mu);

// Ergodicity <=> Cesaro convergence of every basis correlation to its
// product target, the latter evaluated by a far-window signed Cesaro mean
// (no eigensolve).  Returns whether the two sides agree.
bool check_average_mixing_equivalence(const FiniteCorrespondence& fc,
                                      const FiniteMeasure& mu);

// Running Cesaro means of mu(F^j(A) intersect B), plus the product bound
// mu(A)mu(B) and whether B is almost invariant (the existence guarantee).
struct SetAverageResult {
  std::vector<double> cesaro_means;
  double limit_estimate = 0.0;
  double product_bound = 0.0;
  bool b_almost_invariant = false;
};
SetAverageResult check_set_average_inequality(const FiniteCorrespondence& fc,
                                              const FiniteMeasure& mu,
                                              const std::vector<int>& A,
                                              const std::vector<int>& B,
                                              int horizon);

// Random valid instance with a full-support invariant measure (entries
// at or above 0.01, so decider thresholds stay separated); rejection
// sampling, deterministic in the stream.
struct FiniteInstance {
  FiniteCorrespondence fc;
  FiniteMeasure mu;
};
FiniteInstance random_finite_instance(int m, int d, RandomStream& rs);

// Instance files: exact integers for M, decimal mu (optional).
void save_finite(const std::string& path, const FiniteCorrespondence& fc,
                 const FiniteMeasure* mu = nullptr);
struct LoadedFinite {
  FiniteCorrespondence fc;
  bool has_mu = false;
  FiniteMeasure mu;
};
LoadedFinite load_finite(const std::string& path);

}  // namespace corrlab
