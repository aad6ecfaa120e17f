#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <algorithm>
#include <vector>

#include "gibbsmh/graph_lattice.hpp"

namespace gibbsmh {

// ---------------------------------------------------------------------------
// Potential families.
//
// Every family describes one site potential h_m as a function of the values in
// the slots of m (its own value at the origin slot, its neighbors elsewhere).
// The window Hamiltonian is H_W = -sum_{m in W} h_m, density ∝ exp(-H_W).

struct GaussianProduct {
  double variance = 1.0;
};

//! Lattice Gaussian free field with mass:
//! h_m = -[(beta/4) sum_{j~m} (x_m - x_j)^2 + (mass2/2) x_m^2].
struct GaussianFreeField {
  double beta = 1.0;
  double mass2 = 1.0;
};

//! h_m = -[a x_m^4 + b x_m^2 + (beta/4) sum_{j~m} (x_m - x_j)^2], a > 0.
//! Unbounded curvature; outside the bounded-second-derivative assumption.
struct Phi4 {
  double a = 1.0;
  double b = 0.0;
  double beta = 1.0;
};

//! h_m = -[u(x_m) + 1/2 sum_{v != 0} J_v x_m x_{m+v}] with polynomial u.
struct CustomPairwise {
  std::vector<double> self_poly;  // u(x) = sum_p self_poly[p] x^p
  std::vector<std::pair<VertexId, double>> couplings;
  bool supports_free_boundary = true;
};

using PotentialFamily = std::variant<GaussianProduct, GaussianFreeField, Phi4, CustomPairwise>;

inline std::string family_name(const PotentialFamily& f) {
  switch (f.index()) {
    case 0: return "gaussian_product";
    case 1: return "gff";
    case 2: return "phi4";
    default: return "custom_pairwise";
  }
}

class InteractionModel {
 public:
  static InteractionModel gaussian_product(std::size_t d, double variance = 1.0) {
    if (!(variance > 0)) throw std::invalid_argument("gaussian_product: variance must be > 0");
    return InteractionModel(GaussianProduct{variance}, Neighborhood::origin_only(d), 1.0 / variance, true);
  }
  static InteractionModel gff(std::size_t d, double beta, double mass2) {
    if (beta < 0 || mass2 < 0) throw std::invalid_argument("gff: beta and mass2 must be >= 0");
    return InteractionModel(GaussianFreeField{beta, mass2}, Neighborhood::nearest(d),
                            std::max(beta * static_cast<double>(d) + mass2, beta / 2), true);
  }
  static InteractionModel phi4(std::size_t d, double a, double b, double beta) {
    if (!(a > 0)) throw std::invalid_argument("phi4: a must be > 0 for a normalizable density");
    if (beta < 0) throw std::invalid_argument("phi4: beta must be >= 0");
    return InteractionModel(Phi4{a, b, beta}, Neighborhood::nearest(d), std::nullopt, true);
  }
  static InteractionModel custom_pairwise(std::size_t d, std::vector<double> self_poly,
                                          std::vector<std::pair<VertexId, double>> couplings,
                                          bool supports_free_boundary = true) {
    std::vector<VertexId> offs;
    for (const auto& [v, J] : couplings) {
      if (v.dimension() != d) throw std::invalid_argument("custom_pairwise: coupling offset dimension");
      if (v.is_origin()) throw std::invalid_argument("custom_pairwise: coupling at the origin offset");
      offs.push_back(v);
    }
    for (const auto& [v, J] : couplings) {
      bool found = false;
      for (const auto& [w, K] : couplings)
        if (w == -v) found = (K == J);
      if (!found) throw std::invalid_argument("custom_pairwise: couplings must satisfy J(v) = J(-v)");
    }
    std::optional<double> bound;
    if (self_poly.size() <= 3) {
      double b = self_poly.size() == 3 ? std::abs(2 * self_poly[2]) : 0.0;
      for (const auto& [v, J] : couplings) b = std::max(b, std::abs(J) / 2);
      bound = b;
    }
    CustomPairwise fam{std::move(self_poly), std::move(couplings), supports_free_boundary};
    return InteractionModel(std::move(fam), Neighborhood::canonicalize(std::move(offs), d), bound,
                            supports_free_boundary);
  }

  const PotentialFamily& family() const noexcept { return family_; }
  const Neighborhood& neighborhood() const noexcept { return nbhd_; }
  std::size_t dimension() const noexcept { return nbhd_.dimension(); }
  //! Upper bound on |D_{x_i x_j} h_m|, when one exists.
  std::optional<double> grad2_bound() const noexcept { return grad2_bound_; }
  bool supports_free_boundary() const noexcept { return supports_free_; }
  bool is_gaussian() const noexcept {
    if (std::holds_alternative<GaussianProduct>(family_) || std::holds_alternative<GaussianFreeField>(family_))
      return true;
    if (auto* c = std::get_if<CustomPairwise>(&family_)) return c->self_poly.size() <= 3;
    return false;
  }
  //! Constant added to every h_m; cancels in all ratios.
  double energy_offset() const noexcept { return offset_; }
  InteractionModel with_energy_offset(double c) const {
    InteractionModel m = *this;
    m.offset_ = c;
    return m;
  }

 private:
  InteractionModel(PotentialFamily f, Neighborhood nbhd, std::optional<double> bound, bool free_ok)
      : family_(std::move(f)), nbhd_(std::move(nbhd)), grad2_bound_(bound), supports_free_(free_ok) {}

  PotentialFamily family_;
  Neighborhood nbhd_;
  std::optional<double> grad2_bound_;
  bool supports_free_ = true;
  double offset_ = 0.0;
};

//! Raised when a site potential needs a boundary value the window lacks.
class MissingBoundaryValue : public std::runtime_error {
 public:
  explicit MissingBoundaryValue(const VertexId& v)
      : std::runtime_error("missing boundary value at vertex " + v.to_string()), vertex_(v) {}
  const VertexId& vertex() const noexcept { return vertex_; }

 private:
  VertexId vertex_;
};

inline void check_compatible(const InteractionModel& model, const Window& window) {
  if (window.boundary_condition().mode == BoundaryMode::free && !model.supports_free_boundary())
    throw std::invalid_argument(family_name(model.family()) +
                                " potential is undefined on partial neighborhoods; free boundary not supported");
  if (window.is_lattice()) {
    if (window.neighborhood() != model.neighborhood())
      throw std::invalid_argument("window neighborhood does not match the model's interaction range");
  } else if (std::holds_alternative<CustomPairwise>(model.family())) {
    throw std::invalid_argument("custom_pairwise requires a lattice window");
  }
}

//! build_box with the model's neighborhood, rejecting unsupported boundary modes.
inline Window build_box(const InteractionModel& model, std::int64_t half_width, BoundaryCondition bc = {}) {
  Window w = build_box(model.dimension(), half_width, model.neighborhood(), std::move(bc));
  check_compatible(model, w);
  return w;
}

inline Window build_cube(const InteractionModel& model, std::int64_t side, BoundaryCondition bc = {}) {
  Window w = build_cube(model.dimension(), side, model.neighborhood(), std::move(bc));
  check_compatible(model, w);
  return w;
}

//! Field values on a window's vertices.
struct Configuration {
  WindowPtr window;
  std::vector<double> values;

  Configuration() = default;
  Configuration(WindowPtr w, std::vector<double> v) : window(std::move(w)), values(std::move(v)) {
    if (!window) throw std::invalid_argument("configuration without window");
    if (values.size() != window->size()) throw std::invalid_argument("configuration length does not match window");
    for (double x : values)
      if (!std::isfinite(x)) throw std::invalid_argument("configuration values must be finite");
  }
  static Configuration zeros(WindowPtr w) {
    const std::size_t n = w->size();
    return Configuration(std::move(w), std::vector<double>(n, 0.0));
  }

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const Configuration& o) const { return window == o.window && values == o.values; }
};

namespace detail {

inline double ipow(double x, std::size_t p) {
  double r = 1.0;
  while (p) {
    if (p & 1) r *= x;
    x *= x;
    p >>= 1;
  }
  return r;
}

// y^p - x^p as (y - x) * sum_i y^i x^(p-1-i), with the sum formed
// symmetrically so that swapping x and y negates the result exactly.
inline double power_difference(double y, double x, std::size_t p) {
  if (p == 0) return 0.0;
  const std::size_t q = p - 1;
  double s = 0.0;
  for (std::size_t i = 0; 2 * i < q; ++i) s += ipow(y, i) * ipow(x, q - i) + ipow(x, i) * ipow(y, q - i);
  if (q % 2 == 0) s += ipow(x * y, q / 2);
  return (y - x) * s;
}

// Per-site kernels. `v` holds slot values, `on` marks present slots, `o` is
// the origin slot. Coupling arrays are indexed by slot.
struct SiteView {
  const double* v;
  const unsigned char* on;
  std::size_t width;
  std::size_t o;
};

struct GaussianKernel {
  double inv_var;
  double h(const SiteView& s) const { return -0.5 * inv_var * s.v[s.o] * s.v[s.o]; }
  double dh(const SiteView& x, const SiteView& y) const {
    return -0.5 * inv_var * ((y.v[y.o] - x.v[x.o]) * (y.v[y.o] + x.v[x.o]));
  }
  double grad(const SiteView& s, std::size_t j) const { return j == s.o ? -inv_var * s.v[s.o] : 0.0; }
  double hess(const SiteView& s, std::size_t i, std::size_t j) const {
    return (i == s.o && j == s.o) ? -inv_var : 0.0;
  }
};

// Shared by gff and phi4: nearest-neighbor gradient coupling plus a self term.
template <class Self>
struct GradientCouplingKernel {
  double beta;
  Self self;

  double h(const SiteView& s) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.width; ++j)
      if (j != s.o && s.on[j]) {
        const double d = s.v[s.o] - s.v[j];
        acc += d * d;
      }
    return -(0.25 * beta * acc + self.u(s.v[s.o]));
  }
  double dh(const SiteView& x, const SiteView& y) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.width; ++j)
      if (j != x.o && x.on[j]) {
        const double a = y.v[y.o] - y.v[j];
        const double b = x.v[x.o] - x.v[j];
        acc += (a - b) * (a + b);
      }
    return -(0.25 * beta * acc + self.du(x.v[x.o], y.v[y.o]));
  }
  double grad(const SiteView& s, std::size_t j) const {
    if (j != s.o) return s.on[j] ? 0.5 * beta * (s.v[s.o] - s.v[j]) : 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.width; ++i)
      if (i != s.o && s.on[i]) acc += s.v[s.o] - s.v[i];
    return -(0.5 * beta * acc + self.u1(s.v[s.o]));
  }
  double hess(const SiteView& s, std::size_t i, std::size_t j) const {
    if (!s.on[i] || !s.on[j]) return 0.0;
    if (i == s.o && j == s.o) {
      std::size_t deg = 0;
      for (std::size_t k = 0; k < s.width; ++k) deg += (k != s.o && s.on[k]);
      return -(0.5 * beta * static_cast<double>(deg) + self.u2(s.v[s.o]));
    }
    if (i == s.o || j == s.o) return 0.5 * beta;
    return i == j ? -0.5 * beta : 0.0;
  }
};

struct MassTerm {
  double mass2;
  double u(double x) const { return 0.5 * mass2 * x * x; }
  double du(double x, double y) const { return 0.5 * mass2 * ((y - x) * (y + x)); }
  double u1(double x) const { return mass2 * x; }
  double u2(double) const { return mass2; }
};

struct QuarticTerm {
  double a, b;
  double u(double x) const { return a * x * x * x * x + b * x * x; }
  double du(double x, double y) const {
    const double d2 = (y - x) * (y + x);
    return a * d2 * (y * y + x * x) + b * d2;
  }
  double u1(double x) const { return 4 * a * x * x * x + 2 * b * x; }
  double u2(double x) const { return 12 * a * x * x + 2 * b; }
};

struct PairwiseKernel {
  const std::vector<double>* poly;
  std::vector<double> coupling;  // by slot; 0 at the origin

  double u(double x) const {
    double r = 0.0;
    for (std::size_t p = poly->size(); p-- > 0;) r = r * x + (*poly)[p];
    return r;
  }
  double h(const SiteView& s) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.width; ++j)
      if (j != s.o && s.on[j]) acc += coupling[j] * s.v[s.o] * s.v[j];
    return -(u(s.v[s.o]) + 0.5 * acc);
  }
  double dh(const SiteView& x, const SiteView& y) const {
    double du = 0.0;
    for (std::size_t p = 1; p < poly->size(); ++p) du += (*poly)[p] * power_difference(y.v[y.o], x.v[x.o], p);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.width; ++j)
      if (j != x.o && x.on[j]) acc += coupling[j] * (y.v[y.o] * y.v[j] - x.v[x.o] * x.v[j]);
    return -(du + 0.5 * acc);
  }
  double grad(const SiteView& s, std::size_t j) const {
    if (j != s.o) return s.on[j] ? -0.5 * coupling[j] * s.v[s.o] : 0.0;
    double d = 0.0;
    for (std::size_t p = poly->size(); p-- > 1;) d = d * s.v[s.o] + static_cast<double>(p) * (*poly)[p];
    double acc = 0.0;
    for (std::size_t i = 0; i < s.width; ++i)
      if (i != s.o && s.on[i]) acc += coupling[i] * s.v[i];
    return -(d + 0.5 * acc);
  }
  double hess(const SiteView& s, std::size_t i, std::size_t j) const {
    if (!s.on[i] || !s.on[j]) return 0.0;
    if (i == s.o && j == s.o) {
      double d2 = 0.0;
      for (std::size_t p = poly->size(); p-- > 2;)
        d2 = d2 * s.v[s.o] + static_cast<double>(p * (p - 1)) * (*poly)[p];
      return -d2;
    }
    if (i == s.o) return -0.5 * coupling[j];
    if (j == s.o) return -0.5 * coupling[i];
    return 0.0;
  }
};

using Kernel = std::variant<GaussianKernel, GradientCouplingKernel<MassTerm>, GradientCouplingKernel<QuarticTerm>,
                            PairwiseKernel>;

inline Kernel make_kernel(const InteractionModel& model, const Window& window) {
  return std::visit(
      [&](const auto& fam) -> Kernel {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, GaussianProduct>) {
          return GaussianKernel{1.0 / fam.variance};
        } else if constexpr (std::is_same_v<F, GaussianFreeField>) {
          return GradientCouplingKernel<MassTerm>{fam.beta, MassTerm{fam.mass2}};
        } else if constexpr (std::is_same_v<F, Phi4>) {
          return GradientCouplingKernel<QuarticTerm>{fam.beta, QuarticTerm{fam.a, fam.b}};
        } else {
          PairwiseKernel k{&fam.self_poly, std::vector<double>(window.slot_width(), 0.0)};
          const auto& offs = window.neighborhood().offsets();
          for (std::size_t j = 0; j < offs.size(); ++j)
            for (const auto& [v, J] : fam.couplings)
              if (v == offs[j]) k.coupling[j] = J;
          return k;
        }
      },
      model.family());
}

//! Gathers slot values for one site into scratch buffers sized to the
//! window's slot width.
class SiteGather {
 public:
  explicit SiteGather(const Window& w) : w_(&w), vals_(w.slot_width()), on_(w.slot_width()) {}

  SiteView at(std::span<const double> x, std::size_t m) {
    const auto slots = w_->slots(m);
    const auto bvals = w_->boundary_values();
    const std::size_t n = w_->size();
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const auto s = slots[j];
      if (s >= 0) {
        const auto us = static_cast<std::size_t>(s);
        vals_[j] = us < n ? x[us] : bvals[us - n];
        on_[j] = 1;
      } else if (s == Window::kAbsent) {
        vals_[j] = 0.0;
        on_[j] = 0;
      } else {
        throw MissingBoundaryValue(w_->missing_vertex(s));
      }
    }
    return {vals_.data(), on_.data(), vals_.size(), w_->origin_slot()};
  }

 private:
  const Window* w_;
  std::vector<double> vals_;
  std::vector<unsigned char> on_;
};

inline const Window& shared_window(const Configuration& x, const Configuration& y) {
  if (!x.window || !y.window) throw std::invalid_argument("configuration without window");
  if (x.window == y.window) return *x.window;
  const auto a = x.window->vertices();
  const auto b = y.window->vertices();
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin()))
    throw std::invalid_argument("configurations live on different windows");
  return *x.window;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Window-level quantities.

//! Evaluator bound to one (model, window) pair. Holds scratch space, so use
//! one instance per thread; model and window must outlive it.
class Energy {
 public:
  Energy(const InteractionModel& model, const Window& window)
      : model_(&model), window_(&window), kernel_(detail::make_kernel(model, window)), gx_(window), gy_(window) {
    check_compatible(model, window);
  }

  const Window& window() const noexcept { return *window_; }
  const InteractionModel& model() const noexcept { return *model_; }

  //! H_W(x) = -sum_{m in W} (h_m(x) + offset).
  double hamiltonian(std::span<const double> x) {
    check_size(x);
    return std::visit(
        [&](const auto& k) {
          double acc = 0.0;
          for (std::size_t m = 0; m < window_->size(); ++m) acc += k.h(gx_.at(x, m)) + model_->energy_offset();
          return -acc;
        },
        kernel_);
  }

  //! H_W(y) - H_W(x) as one pass of per-site differences. Swapping x and y
  //! negates the result exactly.
  double delta(std::span<const double> x, std::span<const double> y) {
    check_size(x);
    check_size(y);
    return std::visit(
        [&](const auto& k) {
          double acc = 0.0;
          for (std::size_t m = 0; m < window_->size(); ++m) acc += k.dh(gx_.at(x, m), gy_.at(y, m));
          return -acc;
        },
        kernel_);
  }

  //! D_{x_k} H_W(x). For interior k this is sum_{v in 𝒱} D_{x_k} h_{k-v}.
  double grad(std::span<const double> x, std::size_t k) {
    check_size(x);
    if (k >= window_->size()) throw std::out_of_range("grad: vertex index outside window");
    return std::visit(
        [&](const auto& kern) {
          double acc = 0.0;
          for (auto [m, j] : window_->readers(k))
            acc += kern.grad(gx_.at(x, static_cast<std::size_t>(m)), static_cast<std::size_t>(j));
          return -acc;
        },
        kernel_);
  }

  //! D_{x_k x_l} H_W(x).
  double hessian(std::span<const double> x, std::size_t k, std::size_t l) {
    check_size(x);
    if (k >= window_->size() || l >= window_->size()) throw std::out_of_range("hessian: index outside window");
    return std::visit(
        [&](const auto& kern) {
          double acc = 0.0;
          for (auto [m, i] : window_->readers(k))
            for (auto [m2, j] : window_->readers(l))
              if (m == m2)
                acc += kern.hess(gx_.at(x, static_cast<std::size_t>(m)), static_cast<std::size_t>(i),
                                 static_cast<std::size_t>(j));
          return -acc;
        },
        kernel_);
  }

  //! h_m and its derivatives with respect to slot values.
  double site_potential(std::span<const double> x, std::size_t m) {
    return std::visit([&](const auto& k) { return k.h(gx_.at(x, m)) + model_->energy_offset(); }, kernel_);
  }
  double site_grad(std::span<const double> x, std::size_t m, std::size_t slot) {
    return std::visit([&](const auto& k) { return k.grad(gx_.at(x, m), slot); }, kernel_);
  }
  double site_hess(std::span<const double> x, std::size_t m, std::size_t si, std::size_t sj) {
    return std::visit([&](const auto& k) { return k.hess(gx_.at(x, m), si, sj); }, kernel_);
  }

 private:
  void check_size(std::span<const double> x) const {
    if (x.size() != window_->size()) throw std::invalid_argument("value count does not match window size");
  }

  const InteractionModel* model_;
  const Window* window_;
  detail::Kernel kernel_;
  detail::SiteGather gx_, gy_;
};

inline double hamiltonian(const InteractionModel& model, const Configuration& x) {
  return Energy(model, *x.window).hamiltonian(x.values);
}

inline double delta_hamiltonian(const InteractionModel& model, const Configuration& x, const Configuration& y) {
  return Energy(model, detail::shared_window(x, y)).delta(x.values, y.values);
}

//! log(psi(y) / psi(x)) = -(H(y) - H(x)).
inline double log_density_ratio(const InteractionModel& model, const Configuration& x, const Configuration& y) {
  return -delta_hamiltonian(model, x, y);
}

//! Gradient at vertex `k`. Boundary vertices are rejected unless
//! `allow_boundary`, in which case the window-Hamiltonian derivative is given.
inline double grad_hamiltonian(const InteractionModel& model, const Configuration& x, const VertexId& k,
                               bool allow_boundary = false) {
  const auto idx = x.window->index_of(k);
  if (!idx) throw std::out_of_range("grad_hamiltonian: vertex " + k.to_string() + " not in window");
  if (!allow_boundary && !x.window->is_interior(*idx))
    throw std::invalid_argument("grad_hamiltonian: vertex " + k.to_string() + " is on the window boundary");
  return Energy(model, *x.window).grad(x.values, *idx);
}

// ---------------------------------------------------------------------------
// Serialization of the model block: {family, parameters, neighborhood}.

inline nlohmann::json to_json(const InteractionModel& model) {
  nlohmann::json j;
  j["family"] = family_name(model.family());
  j["d"] = model.dimension();
  nlohmann::json p = nlohmann::json::object();
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GaussianProduct>) {
          p["variance"] = f.variance;
        } else if constexpr (std::is_same_v<F, GaussianFreeField>) {
          p["beta"] = f.beta;
          p["mass2"] = f.mass2;
        } else if constexpr (std::is_same_v<F, Phi4>) {
          p["a"] = f.a;
          p["b"] = f.b;
          p["beta"] = f.beta;
        } else {
          p["self_poly"] = f.self_poly;
          nlohmann::json c = nlohmann::json::array();
          for (const auto& [v, J] : f.couplings) c.push_back({{"offset", v.coords}, {"J", J}});
          p["couplings"] = c;
          p["supports_free_boundary"] = f.supports_free_boundary;
        }
      },
      model.family());
  j["parameters"] = p;
  j["neighborhood"] = to_json(model.neighborhood());
  return j;
}

}  // namespace gibbsmh
