#include "tobs/observability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "tobs/parallel.hpp"
#include "tobs/rng.hpp"

namespace tobs::observability {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Perturbed {
  Matrix outputs;  // (K+1) x m
  double target_final = 0.0;
};

Perturbed run_perturbed(const SystemModel& model, const Vector& x0, int i, double shift,
                        const GramianConfig& cfg) {
  Vector x = x0;
  x[i] += shift;
  Perturbed p;
  p.outputs.resize(cfg.K + 1, model.m);
  p.outputs.row(0) = model.apply_observe(x).transpose();
  for (int k = 1; k <= cfg.K; ++k) {
    x = model.apply_step(x);
    if (!x.allFinite()) throw NumericalError("non-finite state", k);
    p.outputs.row(k) = model.apply_observe(x).transpose();
  }
  p.target_final = x[cfg.target - 1];
  return p;
}

// Fills column i of the stacked sensitivity matrix D ((K+1)m x n, time-major)
// and F[i]. Throws NumericalError tagged with the signed perturbation id.
void sensitivity_column(const SystemModel& model, const Vector& x0, int i,
                        const GramianConfig& cfg, Matrix& D, Vector& F) {
  const double h = cfg.delta;
  Perturbed plus, minus;
  try {
    plus = run_perturbed(model, x0, i, +h, cfg);
  } catch (const NumericalError& e) {
    throw NumericalError("empirical Gramian: perturbation +" + std::to_string(i + 1) +
                             " diverged at step " + std::to_string(e.step()),
                         i + 1);
  }
  try {
    minus = run_perturbed(model, x0, i, -h, cfg);
  } catch (const NumericalError& e) {
    throw NumericalError("empirical Gramian: perturbation -" + std::to_string(i + 1) +
                             " diverged at step " + std::to_string(e.step()),
                         -(i + 1));
  }
  const Matrix diff = (plus.outputs - minus.outputs) / (2.0 * h);
  for (int k = 0; k <= cfg.K; ++k) D.block(k * model.m, i, model.m, 1) = diff.row(k).transpose();
  F[i] = (plus.target_final - minus.target_final) / (2.0 * h);
}

void check_inputs(const SystemModel& model, const Vector& x0, const GramianConfig& cfg) {
  cfg.validate(model.n);
  require(x0.size() == model.n, "empirical_pair: initial state has length " +
                                    std::to_string(x0.size()) + ", expected " +
                                    std::to_string(model.n));
}

}  // namespace

std::vector<std::string> GramianConfig::violations(int n) const {
  std::vector<std::string> v;
  if (!(delta > 0.0)) v.emplace_back("delta must be > 0");
  if (K < 1) v.emplace_back("K must be >= 1");
  if (target < 1 || target > n)
    v.push_back("target must lie in 1.." + std::to_string(n));
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) v.emplace_back("rank_tol must lie in (0, 1)");
  if (!(leak_tol > 0.0 && leak_tol <= 1.0)) v.emplace_back("leak_tol must lie in (0, 1]");
  return v;
}

void GramianConfig::validate(int n) const {
  const auto v = violations(n);
  if (v.empty()) return;
  std::string msg = "invalid Gramian config";
  for (const auto& s : v) msg += "; " + s;
  throw InvalidInput(msg);
}

EmpiricalGramian empirical_pair(const SystemModel& model, const Vector& x0,
                                const GramianConfig& cfg) {
  check_inputs(model, x0, cfg);
  const int n = model.n;
  Matrix D(static_cast<Eigen::Index>(cfg.K + 1) * model.m, n);
  Vector F(n);

  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::vector<long> error_ids(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (int i = 0; i < n; ++i) {
    try {
      sensitivity_column(model, x0, i, cfg, D, F);
    } catch (const NumericalError& e) {
      errors[i] = e.what();
      error_ids[i] = e.step();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty()) {
      if (error_ids[i] != 0) throw NumericalError(errors[i], error_ids[i]);
      throw InvalidInput(errors[i]);
    }

  EmpiricalGramian out;
  out.G = D.transpose() * D;
  out.G = 0.5 * (out.G + out.G.transpose()).eval();
  out.F = std::move(F);
  out.base = propagate(model, x0, cfg.K);
  return out;
}

ObservabilityReport unobservability_index(const Matrix& G, const Vector& F,
                                          const GramianConfig& cfg) {
  require(G.rows() == G.cols() && G.rows() == F.size() && F.size() > 0,
          "unobservability_index: G must be n x n and F length n");
  require(G.allFinite() && F.allFinite(), "unobservability_index: non-finite G or F");

  const Matrix Gs = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Gs);
  if (eig.info() != Eigen::Success) throw NumericalError("unobservability_index: eigensolver failed");
  const Vector& lambda = eig.eigenvalues();  // ascending
  const Matrix& V = eig.eigenvectors();

  ObservabilityReport r;
  r.min_eig_G = lambda[0];
  const double lmax = lambda[lambda.size() - 1];
  r.cutoff = lmax > 0.0 ? cfg.rank_tol * lmax : 0.0;

  const Vector coef = V.transpose() * F;
  double quad = 0.0;
  double null_sq = 0.0;
  Vector pinvF = Vector::Zero(F.size());
  r.min_retained_eig = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    if (lmax > 0.0 && lambda[j] > r.cutoff) {
      if (r.effective_rank == 0) r.min_retained_eig = lambda[j];
      ++r.effective_rank;
      quad += coef[j] * coef[j] / lambda[j];
      pinvF += (coef[j] / lambda[j]) * V.col(j);
    } else {
      null_sq += coef[j] * coef[j];
    }
  }

  const double fnorm = F.norm();
  r.null_leak = fnorm > 0.0 ? std::sqrt(null_sq) / fnorm : 0.0;
  if (fnorm == 0.0) {
    r.index = 0.0;
    return r;
  }
  if (r.null_leak > cfg.leak_tol || quad <= 0.0) {
    r.index = kInf;
    return r;
  }
  r.index = std::sqrt(quad);
  r.maximizer = pinvF / std::sqrt(quad);
  return r;
}

ObservabilityReport unobservability_index(const EmpiricalGramian& pair, const GramianConfig& cfg) {
  return unobservability_index(pair.G, pair.F, cfg);
}

double worst_case_error_bound(double index, double noise_sd, int m, int K) {
  if (index == 0.0) return 0.0;
  return index * noise_sd * std::sqrt(static_cast<double>(m) * (K + 1));
}

EmpiricalGramian linear_pair(const Matrix& A, const Matrix& H, int K, int target) {
  require(A.rows() == A.cols() && H.cols() == A.rows(), "linear_pair: dimension mismatch");
  require(K >= 1 && target >= 1 && target <= A.rows(), "linear_pair: bad horizon or target");
  const Eigen::Index n = A.rows();
  EmpiricalGramian out;
  out.G = Matrix::Zero(n, n);
  Matrix Ak = Matrix::Identity(n, n);
  for (int k = 0; k <= K; ++k) {
    out.G += Ak.transpose() * H.transpose() * H * Ak;
    if (k < K) Ak = A * Ak;
  }
  out.F = Ak.row(target - 1).transpose();
  return out;
}

std::uint64_t survey_seed(std::uint64_t seed, long id) {
  return derive_seed(seed, static_cast<std::uint64_t>(id));
}

namespace {

SurveyRow survey_one(const SystemModel& model, const Sampler& sampler, long id,
                     const GramianConfig& cfg, std::uint64_t seed,
                     EmpiricalGramian (*pair_fn)(const SystemModel&, const Vector&,
                                                 const GramianConfig&)) {
  SurveyRow row;
  row.sample_id = id;
  row.seed = survey_seed(seed, id);
  try {
    const Vector x0 = sampler(row.seed);
    const auto pair = pair_fn(model, x0, cfg);
    const auto rep = unobservability_index(pair, cfg);
    row.min_eig_G = rep.min_eig_G;
    row.index = rep.index;
    row.min_retained_eig = rep.min_retained_eig;
    row.effective_rank = rep.effective_rank;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.min_eig_G = std::numeric_limits<double>::quiet_NaN();
    row.index = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

}  // namespace

std::vector<SurveyRow> gramian_survey(const SystemModel& model, const Sampler& sampler, long count,
                                      const GramianConfig& cfg, std::uint64_t seed) {
  require(count >= 1, "gramian_survey: count must be >= 1");
  cfg.validate(model.n);
  std::vector<SurveyRow> rows(static_cast<std::size_t>(count));
  // Samples are the parallel unit; nested regions inside empirical_pair run
  // on a single thread.
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long id = 0; id < count; ++id)
    rows[static_cast<std::size_t>(id)] = survey_one(model, sampler, id, cfg, seed, &empirical_pair);
  return rows;
}

SurveySummary summarize(const std::vector<SurveyRow>& rows) {
  SurveySummary s;
  s.samples = static_cast<long>(rows.size());
  std::vector<double> ok;
  double sum = 0.0;
  long finite = 0;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++s.failed;
      continue;
    }
    ok.push_back(r.index);
    if (std::isinf(r.index)) {
      ++s.unobservable;
    } else {
      sum += r.index;
      ++finite;
    }
  }
  s.mean_index = finite > 0 ? sum / static_cast<double>(finite) : kInf;
  if (!ok.empty()) {
    std::sort(ok.begin(), ok.end());
    const std::size_t h = ok.size() / 2;
    s.median_index = ok.size() % 2 ? ok[h] : 0.5 * (ok[h - 1] + ok[h]);
  }
  return s;
}

void write_survey_csv(std::ostream& os, const std::vector<SurveyRow>& rows) {
  const auto old = os.precision(17);
  os << "sample_id,seed,min_eig_G,index\n";
  for (const auto& r : rows) os << r.sample_id << ',' << r.seed << ',' << r.min_eig_G << ',' << r.index << '\n';
  os.precision(old);
}

namespace reference {

EmpiricalGramian empirical_pair(const SystemModel& model, const Vector& x0,
                                const GramianConfig& cfg) {
  check_inputs(model, x0, cfg);
  const int n = model.n;
  const int m = model.m;
  // dY[k] is the m x n output sensitivity at time k.
  std::vector<Matrix> dY(static_cast<std::size_t>(cfg.K) + 1, Matrix(m, n));
  Vector F(n);
  for (int i = 0; i < n; ++i) {
    std::vector<Vector> yp, ym;
    Vector xp = x0, xm = x0;
    xp[i] += cfg.delta;
    xm[i] -= cfg.delta;
    for (int k = 0; k <= cfg.K; ++k) {
      if (k > 0) {
        xp = model.apply_step(xp);
        xm = model.apply_step(xm);
        if (!xp.allFinite())
          throw NumericalError("empirical Gramian: perturbation +" + std::to_string(i + 1) + " diverged", i + 1);
        if (!xm.allFinite())
          throw NumericalError("empirical Gramian: perturbation -" + std::to_string(i + 1) + " diverged", -(i + 1));
      }
      dY[static_cast<std::size_t>(k)].col(i) =
          (model.apply_observe(xp) - model.apply_observe(xm)) / (2.0 * cfg.delta);
    }
    F[i] = (xp[cfg.target - 1] - xm[cfg.target - 1]) / (2.0 * cfg.delta);
  }
  EmpiricalGramian out;
  out.G = Matrix::Zero(n, n);
  for (const auto& d : dY) out.G += d.transpose() * d;
  out.F = std::move(F);
  out.base = propagate(model, x0, cfg.K);
  return out;
}

std::vector<SurveyRow> gramian_survey(const SystemModel& model, const Sampler& sampler, long count,
                                      const GramianConfig& cfg, std::uint64_t seed) {
  require(count >= 1, "gramian_survey: count must be >= 1");
  cfg.validate(model.n);
  std::vector<SurveyRow> rows;
  rows.reserve(static_cast<std::size_t>(count));
  for (long id = 0; id < count; ++id)
    rows.push_back(survey_one(model, sampler, id, cfg, seed, &reference::empirical_pair));
  return rows;
}

}  // namespace reference

}  // namespace tobs::observability
