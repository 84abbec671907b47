#include "tobs/burgers.hpp"

#include <cmath>
#include <set>
#include <string>

#include "tobs/rng.hpp"

namespace tobs::burgers {

std::vector<std::string> Config::violations() const {
  std::vector<std::string> v;
  if (!(L > 0.0)) v.emplace_back("L must be > 0");
  if (!(T > 0.0)) v.emplace_back("T must be > 0");
  if (!(kappa > 0.0)) v.emplace_back("kappa must be > 0");
  if (Nx < 3) v.emplace_back("Nx must be >= 3");
  if (Nt < 1) v.emplace_back("Nt must be >= 1");
  return v;
}

namespace {
void throw_if_any(const std::vector<std::string>& v, const char* what) {
  if (v.empty()) return;
  std::string msg = what;
  for (const auto& s : v) msg += "; " + s;
  throw InvalidInput(msg);
}
}  // namespace

void Config::validate() const { throw_if_any(violations(), "invalid Burgers config"); }

std::vector<std::string> SensorLayout::violations(const Config& cfg) const {
  std::vector<std::string> v;
  if (indices.empty()) v.emplace_back("sensor layout is empty");
  std::set<int> seen;
  for (int i : indices) {
    if (i < 1 || i > cfg.Nx - 1)
      v.push_back("sensor index " + std::to_string(i) + " outside 1.." + std::to_string(cfg.Nx - 1));
    if (!seen.insert(i).second) v.push_back("duplicate sensor index " + std::to_string(i));
  }
  return v;
}

void SensorLayout::validate(const Config& cfg) const {
  throw_if_any(violations(cfg), "invalid sensor layout");
}

SensorLayout SensorLayout::full(const Config& cfg) {
  SensorLayout layout;
  for (int i = 1; i < cfg.Nx; ++i) layout.indices.push_back(i);
  return layout;
}

FourierInit FourierInit::sample(int NF, double sigma, std::uint64_t seed) {
  require(NF >= 1, "Fourier init: NF must be >= 1");
  require(sigma > 0.0, "Fourier init: sigma must be > 0");
  Rng rng(seed);
  FourierInit init;
  init.NF = NF;
  init.sigma = sigma;
  init.alpha.resize(NF + 1);
  init.beta.resize(NF + 1);
  for (int j = 0; j <= NF; ++j) {
    init.alpha[j] = rng.normal(0.0, sigma);
    init.beta[j] = rng.normal(0.0, sigma);
  }
  init.alpha[NF] = -init.alpha.head(NF).sum();
  return init;
}

Vector FourierInit::evaluate(const Config& cfg) const {
  require(alpha.size() == NF + 1 && beta.size() == NF + 1,
          "Fourier init: coefficient vectors must have NF+1 entries");
  Vector u = Vector::Zero(cfg.state_dim());
  for (int i = 1; i < cfg.Nx; ++i) {
    const double x = cfg.grid_x(i);
    double s = 0.0;
    for (int j = 0; j <= NF; ++j) {
      const double w = 2.0 * std::numbers::pi * j / cfg.L;
      s += alpha[j] * std::cos(w * x) + beta[j] * std::sin(w * x);
    }
    u[i - 1] = s;
  }
  return u;
}

Vector semidiscrete_rhs(const Config& cfg, const Vector& u) {
  const int n = cfg.state_dim();
  require(u.size() == n, "burgers rhs: state has length " + std::to_string(u.size()) +
                             ", expected " + std::to_string(n));
  const double inv2dx = 1.0 / (2.0 * cfg.dx());
  const double kdx2 = cfg.kappa / (cfg.dx() * cfg.dx());
  Vector r(n);
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < n ? u[i + 1] : 0.0;
    r[i] = -u[i] * (right - left) * inv2dx + kdx2 * (right - 2.0 * u[i] + left);
  }
  return r;
}

Vector rk4_step(const Config& cfg, const Vector& u) {
  const double dt = cfg.dt();
  const Vector k1 = semidiscrete_rhs(cfg, u);
  const Vector k2 = semidiscrete_rhs(cfg, u + 0.5 * dt * k1);
  const Vector k3 = semidiscrete_rhs(cfg, u + 0.5 * dt * k2);
  const Vector k4 = semidiscrete_rhs(cfg, u + dt * k3);
  Vector next = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw NumericalError("burgers: RK4 step produced non-finite values");
  return next;
}

SystemModel make_system(const Config& cfg, const SensorLayout& layout) {
  cfg.validate();
  layout.validate(cfg);
  SystemModel model;
  model.n = cfg.state_dim();
  model.m = static_cast<int>(layout.indices.size());
  model.step = [cfg](const Vector& u) { return rk4_step(cfg, u); };
  model.observe = [idx = layout.indices](const Vector& u) {
    Vector y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) y[static_cast<Eigen::Index>(j)] = u[idx[j] - 1];
    return y;
  };
  return model;
}

Vector sample_fourier_initial(const Config& cfg, int NF, double sigma, std::uint64_t seed) {
  return FourierInit::sample(NF, sigma, seed).evaluate(cfg);
}

double energy(const Vector& u) { return u.squaredNorm(); }

}  // namespace tobs::burgers
