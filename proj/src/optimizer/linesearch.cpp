#include "tlas/optimizer/linesearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tlas {

void WolfeConfig::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw Error("Wolfe constants must satisfy 0 < c1 < c2 < 1");
  if (max_evals < 1) throw Error("line search needs at least one evaluation");
  if (!(initial_step > 0.0)) throw Error("initial step must be positive");
}

double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double width = hi - lo;
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  double x = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(disc)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = gb - ga + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b - (b - a) * (gb + d2 - d1) / denom;
      if (std::isfinite(c)) x = c;
    }
  }
  // keep trial points away from the bracket ends
  return std::clamp(x, lo + 0.1 * width, hi - 0.1 * width);
}

namespace {

struct Search {
  const LineFunction& phi;
  double phi0, dphi0;
  const WolfeConfig& cfg;
  int evals = 0;
  LineSearchResult best;  // smallest value among sufficient-decrease trials

  bool armijo(double alpha, double value) const { return value <= phi0 + cfg.c1 * alpha * dphi0; }
  bool curvature(double slope) const { return std::abs(slope) <= cfg.c2 * std::abs(dphi0); }

  LineSample sample(double alpha) {
    ++evals;
    LineSample s = phi(alpha);
    if (!std::isfinite(s.value) || !std::isfinite(s.slope)) {
      s.value = std::numeric_limits<double>::infinity();
      s.slope = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(s.value) && armijo(alpha, s.value) &&
        (best.status == StepStatus::Failed || s.value < best.value)) {
      best = LineSearchResult{alpha, s.value, s.slope, StepStatus::Degraded, 0};
    }
    return s;
  }

  LineSearchResult done(double alpha, const LineSample& s) const {
    return LineSearchResult{alpha, s.value, s.slope, StepStatus::Wolfe, evals};
  }

  LineSearchResult exhausted() const {
    LineSearchResult r = best;
    if (r.status == StepStatus::Failed) {
      r.alpha = 0.0;
      r.value = phi0;
      r.slope = dphi0;
    }
    r.evaluations = evals;
    return r;
  }

  LineSearchResult zoom(double lo, LineSample slo, double hi, LineSample shi) {
    while (evals < cfg.max_evals) {
      double a;
      if (std::isfinite(shi.value) && std::isfinite(shi.slope)) {
        a = cubic_step(lo, slo.value, slo.slope, hi, shi.value, shi.slope);
      } else {
        a = 0.5 * (lo + hi);
      }
      if (a == lo || a == hi) break;
      const LineSample s = sample(a);
      if (!std::isfinite(s.value) || !armijo(a, s.value) || s.value >= slo.value) {
        hi = a;
        shi = s;
      } else {
        if (curvature(s.slope)) return done(a, s);
        if (s.slope * (hi - lo) >= 0.0) {
          hi = lo;
          shi = slo;
        }
        lo = a;
        slo = s;
      }
    }
    return exhausted();
  }
};

}  // namespace

LineSearchResult wolfe_linesearch(const LineFunction& phi, double phi0, double dphi0, const WolfeConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(phi0) || !std::isfinite(dphi0)) throw Error("line search started from a non-finite point");
  if (dphi0 >= 0.0) throw Error("not a descent direction");

  Search s{phi, phi0, dphi0, cfg};
  double prev = 0.0;
  LineSample sprev{phi0, dphi0};
  double alpha = std::min(cfg.initial_step, cfg.max_step);
  for (int i = 0; s.evals < cfg.max_evals; ++i) {
    const LineSample cur = s.sample(alpha);
    if (!std::isfinite(cur.value) || !s.armijo(alpha, cur.value) || (i > 0 && cur.value >= sprev.value)) {
      return s.zoom(prev, sprev, alpha, cur);
    }
    if (s.curvature(cur.slope)) return s.done(alpha, cur);
    if (cur.slope >= 0.0) return s.zoom(alpha, cur, prev, sprev);
    if (alpha >= cfg.max_step) break;
    prev = alpha;
    sprev = cur;
    alpha = std::min(2.0 * alpha, cfg.max_step);
  }
  return s.exhausted();
}

}  // namespace tlas
