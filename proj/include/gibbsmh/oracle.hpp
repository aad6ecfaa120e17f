#pragma once

// Independent references for validating the sampler and estimators: exact
// Gaussian linear algebra, acceptance by quadrature for one or two sites, and
// one-dimensional expectations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gibbsmh/gibbs_model.hpp"
#include "gibbsmh/random.hpp"

namespace gibbsmh {

//! H(x) = 1/2 x^T Q x - b^T x + c for a quadratic window Hamiltonian.
struct PrecisionMatrix {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  double c = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;

  std::size_t size() const noexcept { return static_cast<std::size_t>(Q.rows()); }
  Eigen::VectorXd mean() const { return llt.solve(b); }
  Eigen::MatrixXd covariance() const {
    return llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
  }
  double quadratic_form(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return 0.5 * v.dot(Q * v) - b.dot(v) + c;
  }
};

//! Assembles Q, b, c from the model's analytic site Hessians. Throws for
//! non-quadratic families or a non-positive-definite result.
inline PrecisionMatrix build_precision(const InteractionModel& model, const Window& window) {
  if (!model.is_gaussian())
    throw std::invalid_argument("build_precision: " + family_name(model.family()) + " is not quadratic");
  Energy energy(model, window);
  const std::size_t n = window.size();
  const std::vector<double> zero(n, 0.0);
  PrecisionMatrix pm;
  pm.Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  pm.b.resize(static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const auto slots = window.slots(m);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i] < 0 || static_cast<std::size_t>(slots[i]) >= n) continue;
      for (std::size_t j = 0; j < slots.size(); ++j) {
        if (slots[j] < 0 || static_cast<std::size_t>(slots[j]) >= n) continue;
        pm.Q(slots[i], slots[j]) -= energy.site_hess(zero, m, i, j);
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) pm.b(static_cast<Eigen::Index>(k)) = -energy.grad(zero, k);
  pm.c = energy.hamiltonian(zero);
  pm.llt.compute(pm.Q);
  if (pm.llt.info() != Eigen::Success)
    throw std::runtime_error("build_precision: precision matrix is not positive definite");
  return pm;
}

//! x = mu + L^{-T} z with L L^T = Q, z standard normal. Draw `draw` of the
//! stream is a pure function of (rng, draw).
inline std::vector<double> gaussian_exact_sample(const PrecisionMatrix& pm, const CounterRng& rng,
                                                 std::uint64_t draw = 0) {
  if (pm.llt.info() != Eigen::Success) throw std::runtime_error("gaussian_exact_sample: factorization failed");
  const auto n = static_cast<Eigen::Index>(pm.size());
  Eigen::VectorXd z(n);
  rng.fill_normal(StreamPurpose::initial_state, draw, {z.data(), static_cast<std::size_t>(n)});
  Eigen::VectorXd x = pm.llt.matrixU().solve(z);
  x += pm.mean();
  return {x.data(), x.data() + n};
}

inline Configuration gaussian_exact_sample(const PrecisionMatrix& pm, WindowPtr window, const CounterRng& rng,
                                           std::uint64_t draw = 0) {
  return Configuration(std::move(window), gaussian_exact_sample(pm, rng, draw));
}

//! Interior vertex closest to the window centroid.
inline std::size_t central_interior_vertex(const Window& window) {
  const auto interior = window.interior();
  if (interior.empty()) throw std::invalid_argument("window has no interior vertex");
  const std::size_t d = window.dimension();
  std::vector<double> centroid(d, 0.0);
  for (const auto& v : window.vertices())
    for (std::size_t a = 0; a < d; ++a) centroid[a] += static_cast<double>(v.coords[a]);
  for (auto& c : centroid) c /= static_cast<double>(window.size());
  std::size_t best = interior.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (auto k : interior) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double t = static_cast<double>(window.vertex(k).coords[a]) - centroid[a];
      d2 += t * t;
    }
    if (d2 < best_d2) best_d2 = d2, best = k;
  }
  return best;
}

//! E[(D_k H)^2] under the window Gaussian at a central interior vertex.
//! D_k H = a^T x - b_k with a = Q e_k, so the value is a^T Q^{-1} a plus the
//! squared mean.
inline double gaussian_s2_exact(const InteractionModel& model, const Window& window) {
  const PrecisionMatrix pm = build_precision(model, window);
  const auto k = static_cast<Eigen::Index>(central_interior_vertex(window));
  const Eigen::VectorXd a = pm.Q.col(k);
  const double mean = a.dot(pm.mean()) - pm.b(k);
  return a.dot(pm.llt.solve(a)) + mean * mean;
}

// ---------------------------------------------------------------------------
// Quadrature rules

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

//! Gauss-Legendre on [-1, 1] via the Golub-Welsch eigenproblem.
inline QuadratureRule gauss_legendre(std::size_t order) {
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double k = static_cast<double>(i);
    J(i, i - 1) = J(i - 1, i) = k / std::sqrt(4 * k * k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule r;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

//! Probabilists' Gauss-Hermite: sum w_i g(x_i) ≈ E[g(Z)], Z ~ N(0, 1).
inline QuadratureRule gauss_hermite_probabilist(std::size_t order) {
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule r;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()(i));
    r.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

//! Composite Gauss-Legendre on [lo, hi] with `panels` equal panels.
inline QuadratureRule composite_legendre(double lo, double hi, std::size_t panels, std::size_t order = 8) {
  const QuadratureRule base = gauss_legendre(order);
  QuadratureRule r;
  const double h = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * h;
    for (std::size_t i = 0; i < order; ++i) {
      r.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
      r.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return r;
}

//! A one-dimensional marginal density, possibly unnormalized.
struct Density1D {
  std::function<double(double)> log_density;
  double lo = -12.0;
  double hi = 12.0;
  bool standard_normal = false;
  double mean = 0.0;
  double sd = 1.0;

  static Density1D normal(double mean = 0.0, double sd = 1.0) {
    Density1D d;
    d.standard_normal = true;
    d.mean = mean;
    d.sd = sd;
    d.lo = mean - 40 * sd;
    d.hi = mean + 40 * sd;
    d.log_density = [mean, sd](double x) { return -0.5 * (x - mean) * (x - mean) / (sd * sd); };
    return d;
  }
};

//! E[g(X)] under `density`. Normal densities use Gauss-Hermite; the result
//! is cross-checked against composite Gauss-Legendre, which is also the rule
//! for other densities (normalized numerically).
inline double quad_expectation_1d(const std::function<double(double)>& g, const Density1D& density,
                                  bool use_hermite = true) {
  if (density.standard_normal && use_hermite) {
    const QuadratureRule gh = gauss_hermite_probabilist(120);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) acc += gh.weights[i] * g(density.mean + density.sd * gh.nodes[i]);
    return acc;
  }
  const QuadratureRule rule = composite_legendre(density.lo, density.hi, 400, 10);
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : rule.nodes) peak = std::max(peak, density.log_density(x));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double w = rule.weights[i] * std::exp(density.log_density(rule.nodes[i]) - peak);
    num += w * g(rule.nodes[i]);
    den += w;
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Acceptance by quadrature

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;  // |last - previous refinement|; infinite if never refined
  std::size_t panels = 0;
};

namespace detail {

// Bounding box of {x : H(x) - min H < cutoff} found on a coarse scan.
inline std::vector<std::pair<double, double>> support_box(Energy& energy, std::size_t n, double cutoff = 60.0) {
  const double lim = 40.0, step = 0.1;
  const auto count = static_cast<int>(2 * lim / step) + 1;
  std::vector<double> x(n);
  std::vector<double> h;
  std::vector<std::vector<double>> pts;
  double hmin = std::numeric_limits<double>::infinity();
  const int total = n == 1 ? count : count * count;
  for (int idx = 0; idx < total; ++idx) {
    x[0] = -lim + step * (idx % count);
    if (n == 2) x[1] = -lim + step * (idx / count);
    const double e = energy.hamiltonian(x);
    h.push_back(e);
    pts.push_back(x);
    hmin = std::min(hmin, e);
  }
  std::vector<std::pair<double, double>> box(n, {std::numeric_limits<double>::infinity(),
                                                 -std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] - hmin < cutoff)
      for (std::size_t a = 0; a < n; ++a) {
        box[a].first = std::min(box[a].first, pts[i][a] - step);
        box[a].second = std::max(box[a].second, pts[i][a] + step);
      }
  return box;
}

}  // namespace detail

//! E[1 ∧ exp(-ΔH(x, x + τ n^{-1/2} r))] with x ~ ψ_n and r ~ φ, by tensor
//! composite Gauss-Legendre over state and increment, refined by doubling the
//! panel count until successive values differ by less than `tol`.
inline QuadResult quad_acceptance(const InteractionModel& model, const Window& window, double tau,
                                  IncrementFamily family = IncrementFamily::standard_normal, double tol = 1e-7,
                                  std::size_t max_panels = 0) {
  const std::size_t n = window.size();
  if (n > 2) throw std::invalid_argument("quad_acceptance: window must have 1 or 2 sites");
  if (tau < 0) throw std::invalid_argument("quad_acceptance: tau must be >= 0");
  if (tau == 0) return {1.0, 0.0, 0};
  if (max_panels == 0) max_panels = n == 1 ? 1024 : 16;
  Energy energy(model, window);
  const auto box = detail::support_box(energy, n);
  const double sigma = tau / std::sqrt(static_cast<double>(n));
  const double rlim = family == IncrementFamily::standard_normal ? 9.0 : std::numbers::sqrt3;

  auto integrate = [&](std::size_t panels) {
    std::vector<QuadratureRule> xr;
    for (std::size_t a = 0; a < n; ++a) xr.push_back(composite_legendre(box[a].first, box[a].second, panels));
    const QuadratureRule rr = composite_legendre(-rlim, rlim, panels);
    std::vector<double> rw(rr.nodes.size());
    for (std::size_t i = 0; i < rr.nodes.size(); ++i)
      rw[i] = family == IncrementFamily::standard_normal
                  ? rr.weights[i] * std::exp(-0.5 * rr.nodes[i] * rr.nodes[i]) / std::sqrt(2 * std::numbers::pi)
                  : rr.weights[i] / (2 * std::numbers::sqrt3);
    const std::size_t gx = xr[0].nodes.size(), gr = rr.nodes.size();
    std::vector<double> x(n), y(n);
    // log-density at the state nodes, shifted by its minimum energy
    const std::size_t xcount = n == 1 ? gx : gx * gx;
    std::vector<double> hx(xcount), wx(xcount);
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xcount; ++i) {
      x[0] = xr[0].nodes[i % gx];
      if (n == 2) x[1] = xr[1].nodes[i / gx];
      hx[i] = energy.hamiltonian(x);
      wx[i] = xr[0].weights[i % gx] * (n == 2 ? xr[1].weights[i / gx] : 1.0);
      hmin = std::min(hmin, hx[i]);
    }
    double z = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < xcount; ++i) {
      const double px = wx[i] * std::exp(-(hx[i] - hmin));
      if (px < 1e-300) continue;
      z += px;
      x[0] = xr[0].nodes[i % gx];
      if (n == 2) x[1] = xr[1].nodes[i / gx];
      const std::size_t rcount = n == 1 ? gr : gr * gr;
      double inner = 0.0;
      for (std::size_t j = 0; j < rcount; ++j) {
        y[0] = x[0] + sigma * rr.nodes[j % gr];
        double w = rw[j % gr];
        if (n == 2) {
          y[1] = x[1] + sigma * rr.nodes[j / gr];
          w *= rw[j / gr];
        }
        const double dh = energy.delta(x, y);
        inner += w * (dh <= 0 ? 1.0 : std::exp(-dh));
      }
      acc += px * inner;
    }
    return acc / z;
  };

  std::size_t panels = n == 1 ? 16 : 4;
  double prev = integrate(panels);
  QuadResult res{prev, std::numeric_limits<double>::infinity(), panels};
  while (true) {
    const std::size_t next = panels * 2;
    if (next > max_panels) break;
    const double cur = integrate(next);
    res = {cur, std::abs(cur - prev), next};
    panels = next;
    if (res.error_estimate < tol) break;
    prev = cur;
  }
  return res;
}

}  // namespace gibbsmh
