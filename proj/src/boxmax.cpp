#include "tolalloc/boxmax.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tolalloc/rng.hpp"
#include "tolalloc/surrogate.hpp"

namespace tolalloc {

void BoxMaxConfig::validate() const {
  if (n_multistarts < 0) throw PreconditionError("boxmax: n_multistarts must be >= 0");
  if (polish_max_iters < 0) throw PreconditionError("boxmax: polish_max_iters must be >= 0");
  if (!(grad_step_tol > 0.0 && tie_rel_tol > 0.0 && wall_rel_tol > 0.0)) {
    throw PreconditionError("boxmax: tolerances must be > 0");
  }
}

namespace {

struct Polished {
  Vector x;
  double f;
};

class BoxAscent {
 public:
  BoxAscent(const Response& r, const ToleranceBox& box, const BoxMaxConfig& cfg)
      : r_(r), lo_(box.lower()), hi_(box.upper()), free_(box.half_widths.array() > 0.0), cfg_(cfg) {
    max_hw_ = box.half_widths.maxCoeff();
    // The frozen coordinates are pinned to the center exactly.
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (!free_(i)) lo_(i) = hi_(i) = box.center(i);
    }
  }

  Vector project(const Vector& x) const { return x.cwiseMax(lo_).cwiseMin(hi_); }

  Polished polish(const Vector& start) {
    Vector x = project(start);
    Vector g;
    double f = eval(x, g);
    if (max_hw_ <= 0.0) return {x, f};
    const double stop = cfg_.grad_step_tol * max_hw_;
    double alpha = -1.0;
    Vector gn, xn;
    for (int it = 0; it < cfg_.polish_max_iters; ++it) {
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!free_(i)) g(i) = 0.0;
      }
      const double gmax = g.cwiseAbs().maxCoeff();
      if (!(gmax > 0.0)) break;
      if (alpha <= 0.0) alpha = max_hw_ / gmax;
      bool improved = false;
      while (true) {
        xn = project(x + alpha * g);
        const double step = (xn - x).cwiseAbs().maxCoeff();
        if (step < stop) break;
        const double fn = eval(xn, gn);
        if (fn > f) {
          x.swap(xn);
          g.swap(gn);
          f = fn;
          improved = true;
          alpha *= 2.0;
          break;
        }
        alpha *= 0.5;
      }
      if (!improved) break;
    }
    return {x, f};
  }

  double eval(const Vector& x, Vector& g) {
    ++evaluations;
    const double f = r_.value_grad(x, g);
    if (!std::isfinite(f)) throw NumericError("box maximization: non-finite response value");
    return f;
  }

  int evaluations = 0;

 private:
  const Response& r_;
  Vector lo_, hi_;
  Eigen::Array<bool, Eigen::Dynamic, 1> free_;
  const BoxMaxConfig& cfg_;
  double max_hw_ = 0.0;
};

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

void check_box_in_domain(const Response& response, const ToleranceBox& box) {
  if (!response.domain()) return;
  const Intervals& dom = *response.domain();
  for (int i = 0; i < box.dim(); ++i) {
    const Interval& iv = dom[static_cast<std::size_t>(i)];
    const double slack = kOvershootSlack * iv.width();
    if (box.center(i) - box.half_widths(i) < iv.lo - slack ||
        box.center(i) + box.half_widths(i) > iv.hi + slack) {
      throw DomainError("tolerance box leaves the surrogate domain along mu_" + std::to_string(i + 1));
    }
  }
}

}  // namespace

BoxMaxResult box_maximize(const Response& response, const ToleranceBox& box, const BoxMaxConfig& config) {
  config.validate();
  const int d = box.dim();
  check_dim(response.dim(), d, "box_maximize");
  check_box_in_domain(response, box);

  BoxAscent ascent(response, box, config);
  const Vector& c = box.center;
  const Vector& tau = box.half_widths;

  std::vector<int> free_axes;
  for (int i = 0; i < d; ++i) {
    if (tau(i) > 0.0) free_axes.push_back(i);
  }
  const int nf = static_cast<int>(free_axes.size());

  std::vector<Vector> starts;
  starts.push_back(c);
  for (int i : free_axes) {
    for (double s : {-1.0, 1.0}) {
      Vector x = c;
      x(i) += s * tau(i);
      starts.push_back(std::move(x));
    }
  }
  CounterRng rng(config.seed, /*stream=*/0xB0C5);
  if (nf > 0 && nf <= 10) {
    for (std::uint32_t mask = 0; mask < (1U << nf); ++mask) {
      Vector x = c;
      for (int k = 0; k < nf; ++k) x(free_axes[k]) += ((mask >> k) & 1U ? 1.0 : -1.0) * tau(free_axes[k]);
      starts.push_back(std::move(x));
    }
  } else if (nf > 10) {
    Vector g0 = response.gradient(c);
    for (int s = 0; s < std::max(1, config.n_multistarts); ++s) {
      Vector x = c;
      for (int i : free_axes) {
        double sign = g0(i) >= 0.0 ? 1.0 : -1.0;
        // First corner follows the gradient signs; later ones flip each axis w.p. 1/4.
        if (s > 0 && rng.uniform() < 0.25) sign = -sign;
        x(i) += sign * tau(i);
      }
      starts.push_back(std::move(x));
    }
  }
  if (nf > 0 && config.n_multistarts > 0) {
    const int m = config.n_multistarts;
    std::vector<Vector> lhs(static_cast<std::size_t>(m), c);
    for (int i : free_axes) {
      std::vector<int> perm(static_cast<std::size_t>(m));
      std::iota(perm.begin(), perm.end(), 0);
      for (int k = m - 1; k > 0; --k) {
        const auto j = static_cast<int>(rng.next_bits() % static_cast<std::uint64_t>(k + 1));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(j)]);
      }
      for (int k = 0; k < m; ++k) {
        const double u = (perm[static_cast<std::size_t>(k)] + rng.uniform()) / m;
        lhs[static_cast<std::size_t>(k)](i) = c(i) - tau(i) + 2.0 * tau(i) * u;
      }
    }
    for (auto& x : lhs) starts.push_back(std::move(x));
  }

  std::vector<Polished> found;
  found.reserve(starts.size());
  for (const auto& s : starts) found.push_back(ascent.polish(s));

  BoxMaxResult out;
  out.box = box;
  out.value = -std::numeric_limits<double>::infinity();
  for (const auto& p : found) out.value = std::max(out.value, p.f);

  const double tie = config.tie_rel_tol * std::abs(out.value);
  std::vector<Vector> ties;
  for (const auto& p : found) {
    if (p.f >= out.value - tie) ties.push_back(p.x);
  }
  std::sort(ties.begin(), ties.end(), lex_less);
  const double radius = 1e-8 * 2.0 * tau.norm();
  for (auto& x : ties) {
    const bool dup = std::any_of(out.maximizers.begin(), out.maximizers.end(),
                                 [&](const Vector& y) { return (x - y).norm() <= radius; });
    if (!dup) out.maximizers.push_back(std::move(x));
  }

  out.wall_contacts.assign(static_cast<std::size_t>(d), {});
  for (std::size_t k = 0; k < out.maximizers.size(); ++k) {
    for (int i = 0; i < d; ++i) {
      const double off = std::abs(out.maximizers[k](i) - c(i));
      if (tau(i) == 0.0 || off >= tau(i) * (1.0 - config.wall_rel_tol)) {
        out.wall_contacts[static_cast<std::size_t>(i)].push_back(k);
      }
    }
  }
  out.evaluations = ascent.evaluations;
  return out;
}

Vector grad_G(const Response& response, const ToleranceBox& box, const BoxMaxResult& result) {
  if (result.box.center.size() != box.center.size() || result.box.center != box.center ||
      result.box.half_widths != box.half_widths) {
    throw PreconditionError("grad_G: box maximization result belongs to a different box");
  }
  const int d = box.dim();
  Vector grad = Vector::Zero(d);
  std::vector<Vector> slopes(result.maximizers.size());
  for (int i = 0; i < d; ++i) {
    for (std::size_t k : result.wall_contacts[static_cast<std::size_t>(i)]) {
      if (slopes[k].size() == 0) slopes[k] = response.gradient(result.maximizers[k]);
      const double dq = slopes[k](i);
      const double off = result.maximizers[k](i) - box.center(i);
      const double outward = box.half_widths(i) == 0.0 ? std::abs(dq) : dq * (off > 0.0 ? 1.0 : -1.0);
      grad(i) = std::max(grad(i), std::max(outward, 0.0));
    }
  }
  return grad;
}

SurrogateWorstCase::SurrogateWorstCase(Response response, Vector nominal, BoxMaxConfig config)
    : response_(std::move(response)), nominal_(std::move(nominal)), config_(config) {
  check_dim(nominal_.size(), response_.dim(), "surrogate worst case nominal");
  config_.validate();
}

const BoxMaxResult& SurrogateWorstCase::solve(const ToleranceVector& tau) const {
  check_dim(tau.size(), dim(), "worst case tau");
  if (!cached_ || last_.box.half_widths != tau) {
    last_ = box_maximize(response_, ToleranceBox(nominal_, tau), config_);
    cached_ = true;
  }
  return last_;
}

double SurrogateWorstCase::value(const ToleranceVector& tau) const { return solve(tau).value; }

Vector SurrogateWorstCase::gradient(const ToleranceVector& tau) const {
  const BoxMaxResult& r = solve(tau);
  return grad_G(response_, r.box, r);
}

}  // namespace tolalloc
