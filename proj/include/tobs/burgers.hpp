#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "tobs/common.hpp"
#include "tobs/dynamics.hpp"

namespace tobs::burgers {

/// Viscous Burgers' equation u_t + u u_x = kappa u_xx on [0, L] x [0, T]
/// with u(0,t) = u(L,t) = 0, discretized on Nx intervals in space and Nt
/// RK4 steps in time. The state is the Nx-1 interior grid values.
struct Config {
  double L = 2.0 * std::numbers::pi;
  double T = 5.0;
  double kappa = 0.14;
  int Nx = 50;
  int Nt = 100;

  double dx() const { return L / Nx; }
  double dt() const { return T / Nt; }
  int state_dim() const { return Nx - 1; }
  /// Grid coordinate x_i = i*dx for i in 0..Nx.
  double grid_x(int i) const { return i * dx(); }

  /// Every violated constraint, one message per entry; empty when valid.
  std::vector<std::string> violations() const;
  void validate() const;
};

/// Ordered interior grid indices (1..Nx-1) where sensors read u.
struct SensorLayout {
  std::vector<int> indices;

  std::vector<std::string> violations(const Config& cfg) const;
  void validate(const Config& cfg) const;

  static SensorLayout case1() { return {{20, 21, 29, 30}}; }
  static SensorLayout case2() { return {{18, 19, 30, 31}}; }
  static SensorLayout full(const Config& cfg);
};

/// Truncated Fourier initial condition. alpha/beta hold NF+1 coefficients.
struct FourierInit {
  int NF = 3;
  double sigma = 0.3;
  Vector alpha;
  Vector beta;

  /// Draws alpha_j, beta_j ~ N(0, sigma^2) and sets alpha_NF = -sum_{j<NF} alpha_j.
  static FourierInit sample(int NF, double sigma, std::uint64_t seed);
  /// u_i(0) at interior grid points i = 1..Nx-1.
  Vector evaluate(const Config& cfg) const;
};

/// Central-difference right-hand side with zero ghost values u_0 = u_Nx = 0:
///   -u_i (u_{i+1} - u_{i-1}) / (2 dx) + kappa (u_{i+1} - 2 u_i + u_{i-1}) / dx^2
Vector semidiscrete_rhs(const Config& cfg, const Vector& u);

/// One classical RK4 step of size dt. Throws NumericalError on non-finite output.
Vector rk4_step(const Config& cfg, const Vector& u);

/// Burgers model with outputs read at the layout's grid indices.
SystemModel make_system(const Config& cfg, const SensorLayout& layout);

/// Convenience: FourierInit::sample(NF, sigma, seed).evaluate(cfg).
Vector sample_fourier_initial(const Config& cfg, int NF, double sigma, std::uint64_t seed);

/// Discrete energy sum_i u_i^2.
double energy(const Vector& u);

}  // namespace tobs::burgers
