#include "tobs/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace tobs::optim {

void LbfgsConfig::validate() const {
  require(memory >= 1, "lbfgs: memory must be >= 1");
  require(max_iterations >= 1, "lbfgs: max_iterations must be >= 1");
  require(grad_tol > 0.0, "lbfgs: grad_tol must be > 0");
  require(c1 > 0.0 && c1 < c2 && c2 < 1.0, "lbfgs: need 0 < c1 < c2 < 1");
  require(max_line_search >= 1, "lbfgs: max_line_search must be >= 1");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max_iterations";
    case Status::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Point {
  double a = 0.0;
  double f = 0.0;
  double df = 0.0;  // directional derivative
  Vector x;
  Vector g;
};

// Minimizer of the cubic interpolating (a, f, df) at both ends, clamped to
// the inner 80% of the interval; bisection when the cubic is degenerate.
double interpolate(const Point& lo, const Point& hi) {
  const double left = std::min(lo.a, hi.a);
  const double right = std::max(lo.a, hi.a);
  const double margin = 0.1 * (right - left);
  const double d1 = lo.df + hi.df - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.df * hi.df;
  double a = 0.5 * (lo.a + hi.a);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
    const double denom = hi.df - lo.df + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = hi.a - (hi.a - lo.a) * (hi.df + d2 - d1) / denom;
      if (std::isfinite(cand)) a = cand;
    }
  }
  return std::clamp(a, left + margin, right - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& fn, const LbfgsConfig& cfg, const Vector& x, double f0,
             const Vector& d, double df0, int& evaluations)
      : fn_(fn), cfg_(cfg), x_(x), f0_(f0), d_(d), df0_(df0), evals_(evaluations) {}

  /// Returns true with `out` set to a strong-Wolfe point. On failure `best_`
  /// holds the lowest sufficient-decrease point seen, if any.
  bool run(double a1, Point& out) {
    Point prev{0.0, f0_, df0_, x_, {}};
    double a = a1;
    for (int i = 0; i < cfg_.max_line_search; ++i) {
      Point cur = eval(a);
      if (!decreases(cur) || (i > 0 && cur.f >= prev.f)) {
        if (!std::isfinite(cur.f)) cur.f = std::numeric_limits<double>::max();
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.df) <= -cfg_.c2 * df0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.df >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      a *= 2.0;
    }
    return false;
  }

  const Point* best() const { return has_best_ ? &best_ : nullptr; }

 private:
  // Sufficient decrease. The strict f < f0 matters for tiny steps, where
  // f0 + c1 a df0 rounds to f0 and an unchanged f would otherwise pass.
  bool decreases(const Point& p) const {
    return std::isfinite(p.f) && p.f <= f0_ + cfg_.c1 * p.a * df0_ && p.f < f0_;
  }

  Point eval(double a) {
    Point p;
    p.a = a;
    p.x = x_ + a * d_;
    p.g.resize(p.x.size());
    p.f = fn_(p.x, p.g);
    ++evals_;
    p.df = p.g.dot(d_);
    if (decreases(p) && (!has_best_ || p.f < best_.f)) {
      best_ = p;
      has_best_ = true;
    }
    return p;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (int j = 0; j < cfg_.max_line_search; ++j) {
      if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) return false;
      Point cur = eval(interpolate(lo, hi));
      if (!decreases(cur) || cur.f >= lo.f) {
        if (!std::isfinite(cur.f)) cur.f = std::numeric_limits<double>::max();
        hi = std::move(cur);
      } else {
        if (std::abs(cur.df) <= -cfg_.c2 * df0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.df * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return false;
  }

  const Objective& fn_;
  const LbfgsConfig& cfg_;
  const Vector& x_;
  double f0_;
  const Vector& d_;
  double df0_;
  int& evals_;
  Point best_;
  bool has_best_ = false;
};

}  // namespace

Result minimize(const Objective& fn, Vector x0, const LbfgsConfig& cfg, const Monitor& monitor) {
  cfg.validate();
  Result res;
  Vector g(x0.size());
  double f = fn(x0, g);
  res.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) throw NumericalError("lbfgs: non-finite objective at the starting point");
  res.x = std::move(x0);
  res.f = f;
  res.history.push_back(f);

  std::deque<Vector> S, Y;
  std::deque<double> rho;
  const auto converged = [&](const Vector& grad, double fv) {
    return grad.lpNorm<Eigen::Infinity>() <= cfg.grad_tol * std::max(1.0, std::abs(fv));
  };

  if (converged(g, f)) {
    res.status = Status::Converged;
    return res;
  }

  bool retried = false;
  while (res.iterations < cfg.max_iterations) {
    // Two-loop recursion.
    Vector d = -g;
    std::vector<double> alpha(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(d);
      d -= alpha[i] * Y[i];
    }
    if (!S.empty()) d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(d);
      d += (alpha[i] - beta) * S[i];
    }
    double df0 = g.dot(d);
    if (!(df0 < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -g;
      df0 = -g.squaredNorm();
    }

    const double a1 = S.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearch ls(fn, cfg, res.x, f, d, df0, res.evaluations);
    Point next;
    if (!ls.run(a1, next)) {
      if (const Point* b = ls.best()) {
        next = *b;  // sufficient decrease without curvature: still a valid descent step
      } else if (!retried && !S.empty()) {
        retried = true;
        S.clear();
        Y.clear();
        rho.clear();
        continue;
      } else {
        res.status = Status::LineSearchFailed;
        return res;
      }
    }
    retried = false;

    Vector s = next.x - res.x;
    Vector y = next.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (static_cast<int>(S.size()) == cfg.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
    }
    res.x = std::move(next.x);
    g = std::move(next.g);
    f = next.f;
    res.f = f;
    ++res.iterations;
    res.history.push_back(f);

    if (monitor && !monitor(res.iterations, f, res.x)) {
      res.status = Status::MaxIterations;
      return res;
    }
    if (converged(g, f)) {
      res.status = Status::Converged;
      return res;
    }
  }
  res.status = Status::MaxIterations;
  return res;
}

}  // namespace tobs::optim
