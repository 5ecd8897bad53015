#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace tolalloc {

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Brent's zero finder on a bracket with f(a), f(b) of opposite sign (or one
/// of them zero). Stops once |f| <= ftol or the bracket shrinks below xtol.
template <typename F>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double ftol,
                      double xtol = 0.0, int max_evals = 200) {
  RootResult res;
  if (std::abs(fa) <= ftol) return {a, fa, 0, true};
  if (std::abs(fb) <= ftol) return {b, fb, 0, true};
  if ((fa > 0.0) == (fb > 0.0)) return {std::abs(fa) < std::abs(fb) ? a : b,
                                        std::abs(fa) < std::abs(fb) ? fa : fb, 0, false};
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_evals; ++it) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * eps * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(fb) <= ftol || std::abs(m) <= tol || fb == 0.0) {
      return {b, fb, res.evaluations, std::abs(fb) <= ftol || fb == 0.0 || std::abs(m) <= tol};
    }
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
    ++res.evaluations;
  }
  return {b, fb, res.evaluations, std::abs(fb) <= ftol};
}

struct MaximizeResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

/// Brent's golden-section/parabolic maximizer of f on [a, b]. The interior
/// search never probes the endpoints; callers check those separately.
template <typename F>
MaximizeResult brent_maximize(F&& f, double a, double b, double rel_tol, double abs_tol = 1e-20,
                              int max_evals = 200) {
  constexpr double golden = 0.3819660112501051;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = f(x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  int evals = 1;
  while (evals < max_evals) {
    const double xm = 0.5 * (a + b);
    const double tol1 = rel_tol * std::abs(x) + abs_tol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > tol1) {
      // Parabola through (v, w, x), written for maximization.
      double r = (x - w) * (fv - fx);
      double q = (x - v) * (fw - fx);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = x >= xm ? a - x : b - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    ++evals;
    if (fu >= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu >= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu >= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, fx, evals};
}

}  // namespace tolalloc
