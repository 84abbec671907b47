#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "tobs/common.hpp"
#include "tobs/dynamics.hpp"

namespace tobs::observability {

struct GramianConfig {
  double delta = 1e-3;      ///< central-difference perturbation size
  int K = 9;                ///< horizon; outputs y(0..K) are used
  int target = 25;          ///< 1-based index of the targeted state component
  double rank_tol = 1e-12;  ///< eigenvalues below rank_tol * lambda_max(G) are truncated
  /// Relative part of F (||F_null|| / ||F||) lying in the truncated subspace
  /// above which the target is reported as unobservable (+inf index).
  double leak_tol = 0.5;

  std::vector<std::string> violations(int n) const;
  void validate(int n) const;
};

/// Empirical observability Gramian G and sensitivity row F of the targeted
/// final-state component x_target(K) with respect to x(0).
struct EmpiricalGramian {
  Matrix G;  ///< n x n, symmetric PSD
  Vector F;  ///< length n
  Trajectory base;
};

struct ObservabilityReport {
  /// rho / epsilon; +inf when the target is practically unobservable.
  double index = 0.0;
  double min_eig_G = 0.0;
  /// Worst-case initial perturbation with unit G-norm (empty when index is infinite).
  Vector maximizer;
  int effective_rank = 0;
  double cutoff = 0.0;           ///< absolute eigenvalue cutoff used
  double min_retained_eig = 0.0; ///< smallest eigenvalue above the cutoff
  double null_leak = 0.0;        ///< ||F_null|| / ||F||

  bool finite() const { return index < std::numeric_limits<double>::infinity(); }
};

/// Builds (G, F) from the 2n central-difference trajectories x(0) +/- delta e_i.
/// The perturbations run in parallel; the result is bit-identical for any
/// worker count. NumericalError::step() carries the perturbation id
/// (+i or -i, 1-based) that diverged.
EmpiricalGramian empirical_pair(const SystemModel& model, const Vector& x0,
                                const GramianConfig& cfg);

/// Closed-form solution of max (F dx)^2 s.t. dx' G dx = 1 using the
/// truncated eigendecomposition pseudo-inverse of G.
ObservabilityReport unobservability_index(const EmpiricalGramian& pair, const GramianConfig& cfg);

/// Same, on an explicit (G, F) pair.
ObservabilityReport unobservability_index(const Matrix& G, const Vector& F, const GramianConfig& cfg);

/// Worst-case target error index * noise_sd * sqrt(m (K+1)).
double worst_case_error_bound(double index, double noise_sd, int m, int K);

/// Exact linear-system Gramian sum_{k=0}^K (A')^k H' H A^k and row e_target' A^K.
EmpiricalGramian linear_pair(const Matrix& A, const Matrix& H, int K, int target);

struct SurveyRow {
  long sample_id = 0;
  std::uint64_t seed = 0;
  double min_eig_G = 0.0;
  double index = 0.0;
  double min_retained_eig = 0.0;
  int effective_rank = 0;
  std::string error;  ///< non-empty when the sample failed

  bool ok() const { return error.empty(); }
};

struct SurveySummary {
  long samples = 0;
  long failed = 0;
  long unobservable = 0;  ///< samples with an infinite index
  double mean_index = 0.0;   ///< over samples with a finite index
  double median_index = 0.0; ///< over successful samples (inf counted as largest)
};

using Sampler = std::function<Vector(std::uint64_t seed)>;

/// Seed of survey sample `id` under base seed `seed`.
std::uint64_t survey_seed(std::uint64_t seed, long id);

/// Per-sample (min eigenvalue, index). Samples run in parallel; failures
/// are recorded per row and the survey continues.
std::vector<SurveyRow> gramian_survey(const SystemModel& model, const Sampler& sampler,
                                      long count, const GramianConfig& cfg, std::uint64_t seed);

SurveySummary summarize(const std::vector<SurveyRow>& rows);

/// CSV header `sample_id,seed,min_eig_G,index`.
void write_survey_csv(std::ostream& os, const std::vector<SurveyRow>& rows);

namespace reference {

/// Serial implementation that accumulates G = sum_k dY(k)' dY(k) term by term.
EmpiricalGramian empirical_pair(const SystemModel& model, const Vector& x0,
                                const GramianConfig& cfg);

std::vector<SurveyRow> gramian_survey(const SystemModel& model, const Sampler& sampler,
                                      long count, const GramianConfig& cfg, std::uint64_t seed);

}  // namespace reference

}  // namespace tobs::observability
