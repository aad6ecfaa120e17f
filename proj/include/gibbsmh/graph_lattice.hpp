#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gibbsmh {

//! Integer lattice coordinates of a vertex.
struct VertexId {
  std::vector<std::int64_t> coords;

  VertexId() = default;
  explicit VertexId(std::vector<std::int64_t> c) : coords(std::move(c)) {}
  VertexId(std::initializer_list<std::int64_t> c) : coords(c) {}

  std::size_t dimension() const noexcept { return coords.size(); }
  auto operator<=>(const VertexId&) const = default;
  bool operator==(const VertexId&) const = default;

  VertexId operator+(const VertexId& o) const {
    check_same_dimension(o);
    VertexId r = *this;
    for (std::size_t i = 0; i < coords.size(); ++i) r.coords[i] += o.coords[i];
    return r;
  }
  VertexId operator-(const VertexId& o) const {
    check_same_dimension(o);
    VertexId r = *this;
    for (std::size_t i = 0; i < coords.size(); ++i) r.coords[i] -= o.coords[i];
    return r;
  }
  VertexId operator-() const {
    VertexId r = *this;
    for (auto& c : r.coords) c = -c;
    return r;
  }
  bool is_origin() const noexcept {
    return std::all_of(coords.begin(), coords.end(), [](auto c) { return c == 0; });
  }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < coords.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(coords[i]);
    }
    return s + ")";
  }

 private:
  void check_same_dimension(const VertexId& o) const {
    if (o.coords.size() != coords.size()) throw std::invalid_argument("VertexId dimension mismatch");
  }
};

//! The finite interaction range: a symmetric set of lattice offsets that
//! contains the origin, kept sorted lexicographically.
class Neighborhood {
 public:
  Neighborhood() = default;

  //! Validates an offset list without changing it (other than sorting).
  explicit Neighborhood(std::vector<VertexId> offsets) : offsets_(std::move(offsets)) {
    if (offsets_.empty()) throw std::invalid_argument("neighborhood must contain the origin");
    const std::size_t d = offsets_.front().dimension();
    if (d == 0) throw std::invalid_argument("neighborhood dimension must be >= 1");
    for (const auto& v : offsets_)
      if (v.dimension() != d) throw std::invalid_argument("neighborhood offsets of mixed dimension");
    std::sort(offsets_.begin(), offsets_.end());
    if (std::adjacent_find(offsets_.begin(), offsets_.end()) != offsets_.end())
      throw std::invalid_argument("neighborhood offsets must be distinct");
    if (!contains(VertexId(std::vector<std::int64_t>(d, 0))))
      throw std::invalid_argument("neighborhood must contain the origin");
    for (const auto& v : offsets_)
      if (!contains(-v)) throw std::invalid_argument("neighborhood not symmetric: missing -" + v.to_string());
  }

  //! Sorts, deduplicates, adds the origin and closes under negation.
  static Neighborhood canonicalize(std::vector<VertexId> offsets, std::size_t dimension = 0) {
    if (dimension == 0) {
      if (offsets.empty()) throw std::invalid_argument("cannot infer neighborhood dimension");
      dimension = offsets.front().dimension();
    }
    const std::size_t n = offsets.size();
    for (std::size_t i = 0; i < n; ++i) offsets.push_back(-offsets[i]);
    offsets.emplace_back(std::vector<std::int64_t>(dimension, 0));
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    return Neighborhood(std::move(offsets));
  }

  static Neighborhood origin_only(std::size_t d) {
    return Neighborhood({VertexId(std::vector<std::int64_t>(d, 0))});
  }

  //! Origin plus the 2d unit vectors +-e_i.
  static Neighborhood nearest(std::size_t d) {
    std::vector<VertexId> offs;
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<std::int64_t> e(d, 0);
      e[i] = 1;
      offs.emplace_back(e);
    }
    return canonicalize(std::move(offs), d);
  }

  std::size_t dimension() const noexcept { return offsets_.empty() ? 0 : offsets_.front().dimension(); }
  std::size_t size() const noexcept { return offsets_.size(); }
  std::span<const VertexId> offsets() const noexcept { return offsets_; }
  bool contains_origin() const { return !offsets_.empty(); }
  bool contains(const VertexId& v) const { return std::binary_search(offsets_.begin(), offsets_.end(), v); }
  std::size_t origin_index() const {
    return static_cast<std::size_t>(
        std::lower_bound(offsets_.begin(), offsets_.end(), VertexId(std::vector<std::int64_t>(dimension(), 0))) -
        offsets_.begin());
  }
  //! Position of `v` in the canonical order, if present.
  std::optional<std::size_t> index_of(const VertexId& v) const {
    auto it = std::lower_bound(offsets_.begin(), offsets_.end(), v);
    if (it == offsets_.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - offsets_.begin());
  }

  bool operator==(const Neighborhood&) const = default;

 private:
  std::vector<VertexId> offsets_;
};

enum class BoundaryMode { zero, free, constant, explicit_values };

//! Frozen configuration z on the complement of a window.
struct BoundaryCondition {
  BoundaryMode mode = BoundaryMode::zero;
  double constant = 0.0;
  std::map<VertexId, double> values;  // explicit_values only

  static BoundaryCondition zero() { return {}; }
  static BoundaryCondition free() { return {BoundaryMode::free, 0.0, {}}; }
  static BoundaryCondition constant_value(double c) { return {BoundaryMode::constant, c, {}}; }
  static BoundaryCondition explicit_map(std::map<VertexId, double> v) {
    return {BoundaryMode::explicit_values, 0.0, std::move(v)};
  }
};

inline std::string to_string(BoundaryMode m) {
  switch (m) {
    case BoundaryMode::zero: return "zero";
    case BoundaryMode::free: return "free";
    case BoundaryMode::constant: return "constant";
    case BoundaryMode::explicit_values: return "explicit";
  }
  return "?";
}

inline BoundaryMode boundary_mode_from_string(const std::string& s) {
  if (s == "zero") return BoundaryMode::zero;
  if (s == "free") return BoundaryMode::free;
  if (s == "constant") return BoundaryMode::constant;
  if (s == "explicit") return BoundaryMode::explicit_values;
  throw std::invalid_argument("unknown boundary_mode '" + s + "'");
}

//! ∂V = {k ∈ V : k + 𝒱 ⊄ V}. Returned sorted.
inline std::vector<VertexId> boundary_of(std::span<const VertexId> window_vertices, const Neighborhood& nbhd) {
  const std::set<VertexId> inside(window_vertices.begin(), window_vertices.end());
  std::vector<VertexId> out;
  for (const auto& k : inside) {
    for (const auto& v : nbhd.offsets()) {
      if (!inside.contains(k + v)) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

//! A finite vertex set Vₙ with its boundary and boundary values.
//!
//! Site potentials are evaluated through a slot table: for each site and each
//! neighborhood position, the slot is an interior index in [0, n), an index
//! n + b into boundary_values(), or one of the sentinels below.
class Window {
 public:
  static constexpr std::int32_t kAbsent = -1;   // dropped (free boundary or padding)
  static constexpr std::int32_t kMissing = -2;  // required value not supplied

  //! Lattice window with neighborhood offsets.
  static Window from_vertices(std::vector<VertexId> vertices, Neighborhood nbhd, BoundaryCondition bc = {}) {
    Window w;
    if (vertices.empty()) throw std::invalid_argument("window must contain at least one vertex");
    w.dimension_ = nbhd.dimension();
    for (const auto& v : vertices)
      if (v.dimension() != w.dimension_) throw std::invalid_argument("vertex dimension does not match neighborhood");
    std::sort(vertices.begin(), vertices.end());
    if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end())
      throw std::invalid_argument("duplicate vertex in window");
    w.vertices_ = std::move(vertices);
    w.neighborhood_ = std::move(nbhd);
    w.bc_ = std::move(bc);
    w.width_ = w.neighborhood_->size();
    w.origin_slot_ = w.neighborhood_->origin_index();
    for (std::size_t i = 0; i < w.vertices_.size(); ++i) w.index_.emplace(w.vertices_[i], i);

    std::map<VertexId, std::int32_t> outside_slot;
    const auto n = static_cast<std::int32_t>(w.vertices_.size());
    w.slots_.assign(w.vertices_.size() * w.width_, kAbsent);
    w.is_boundary_.assign(w.vertices_.size(), 0);
    for (std::size_t i = 0; i < w.vertices_.size(); ++i) {
      for (std::size_t j = 0; j < w.width_; ++j) {
        const VertexId u = w.vertices_[i] + w.neighborhood_->offsets()[j];
        if (auto it = w.index_.find(u); it != w.index_.end()) {
          w.slots_[i * w.width_ + j] = static_cast<std::int32_t>(it->second);
          continue;
        }
        w.is_boundary_[i] = 1;
        w.slots_[i * w.width_ + j] = w.outside_slot_for(u, n, outside_slot);
      }
    }
    w.finish();
    return w;
  }

  //! Box [lo_i, hi_i] per axis.
  static Window box(std::vector<std::int64_t> lo, std::vector<std::int64_t> hi, Neighborhood nbhd,
                    BoundaryCondition bc = {}) {
    if (lo.size() != hi.size() || lo.size() != nbhd.dimension())
      throw std::invalid_argument("box bounds do not match neighborhood dimension");
    std::size_t total = 1;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      if (hi[a] < lo[a]) throw std::invalid_argument("empty box");
      total *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
    }
    std::vector<VertexId> verts;
    verts.reserve(total);
    std::vector<std::int64_t> cur = lo;
    for (std::size_t count = 0; count < total; ++count) {
      verts.emplace_back(cur);
      for (std::size_t a = lo.size(); a-- > 0;) {
        if (++cur[a] <= hi[a]) break;
        cur[a] = lo[a];
      }
    }
    Window w = from_vertices(std::move(verts), std::move(nbhd), std::move(bc));
    w.box_lo_ = std::move(lo);
    w.box_hi_ = std::move(hi);
    return w;
  }

  //! General finite graph given as neighbor lists over global vertex ids.
  //! `members` selects the window; neighbors outside it take boundary values.
  //! Translation invariance is not assumed for such windows.
  static Window from_adjacency(const std::vector<std::vector<std::size_t>>& neighbors,
                               std::vector<std::size_t> members, BoundaryCondition bc = {}) {
    Window w;
    w.dimension_ = 1;
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) throw std::invalid_argument("window must contain at least one vertex");
    std::size_t max_degree = 0;
    for (auto m : members) {
      if (m >= neighbors.size()) throw std::invalid_argument("adjacency member out of range");
      max_degree = std::max(max_degree, neighbors[m].size());
    }
    w.width_ = max_degree + 1;
    w.origin_slot_ = 0;
    w.bc_ = std::move(bc);
    for (auto m : members) w.vertices_.emplace_back(VertexId{static_cast<std::int64_t>(m)});
    for (std::size_t i = 0; i < w.vertices_.size(); ++i) w.index_.emplace(w.vertices_[i], i);
    const auto n = static_cast<std::int32_t>(w.vertices_.size());
    std::map<VertexId, std::int32_t> outside_slot;
    w.slots_.assign(w.vertices_.size() * w.width_, kAbsent);
    w.is_boundary_.assign(w.vertices_.size(), 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      w.slots_[i * w.width_] = static_cast<std::int32_t>(i);
      const auto& nb = neighbors[members[i]];
      for (std::size_t j = 0; j < nb.size(); ++j) {
        const VertexId u{static_cast<std::int64_t>(nb[j])};
        if (auto it = w.index_.find(u); it != w.index_.end()) {
          w.slots_[i * w.width_ + 1 + j] = static_cast<std::int32_t>(it->second);
        } else {
          w.is_boundary_[i] = 1;
          w.slots_[i * w.width_ + 1 + j] = w.outside_slot_for(u, n, outside_slot);
        }
      }
    }
    w.adjacency_ = neighbors;
    w.finish();
    return w;
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  std::span<const VertexId> vertices() const noexcept { return vertices_; }
  const VertexId& vertex(std::size_t i) const { return vertices_.at(i); }
  std::optional<std::size_t> index_of(const VertexId& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool is_lattice() const noexcept { return neighborhood_.has_value(); }
  const Neighborhood& neighborhood() const {
    if (!neighborhood_) throw std::logic_error("adjacency window has no lattice neighborhood");
    return *neighborhood_;
  }
  const BoundaryCondition& boundary_condition() const noexcept { return bc_; }

  std::size_t slot_width() const noexcept { return width_; }
  std::size_t origin_slot() const noexcept { return origin_slot_; }
  std::span<const std::int32_t> slots(std::size_t site) const noexcept {
    return {slots_.data() + site * width_, width_};
  }
  std::span<const std::int32_t> slot_table() const noexcept { return slots_; }

  //! Sorted indices of ∂V.
  std::span<const std::size_t> boundary() const noexcept { return boundary_; }
  std::span<const std::size_t> interior() const noexcept { return interior_; }
  bool is_interior(std::size_t i) const { return !is_boundary_.at(i); }
  std::vector<VertexId> boundary_vertices() const {
    std::vector<VertexId> out;
    for (auto i : boundary_) out.push_back(vertices_[i]);
    return out;
  }

  //! Vertices in (𝒱 + ∂V) \ V that carry a frozen value, in slot order.
  std::span<const VertexId> outside_vertices() const noexcept { return outside_; }
  std::span<const double> boundary_values() const noexcept { return boundary_values_; }
  //! Outside vertices that are referenced but had no supplied value.
  std::span<const VertexId> missing_boundary() const noexcept { return missing_; }
  const VertexId& missing_vertex(std::int32_t missing_slot_code) const {
    return missing_.at(static_cast<std::size_t>(-missing_slot_code - 2));
  }
  bool is_complete() const noexcept { return missing_.empty(); }

  //! Sites m whose potential h_m reads x_k, as (m, slot position in m).
  std::span<const std::pair<std::int32_t, std::int32_t>> readers(std::size_t k) const noexcept {
    return {readers_.data() + reader_offsets_[k], reader_offsets_[k + 1] - reader_offsets_[k]};
  }

  bool is_box() const noexcept { return !box_lo_.empty(); }
  std::span<const std::int64_t> box_lo() const noexcept { return box_lo_; }
  std::span<const std::int64_t> box_hi() const noexcept { return box_hi_; }
  const std::optional<std::vector<std::vector<std::size_t>>>& adjacency() const noexcept { return adjacency_; }

 private:
  Window() = default;

  std::int32_t outside_slot_for(const VertexId& u, std::int32_t n, std::map<VertexId, std::int32_t>& cache) {
    if (bc_.mode == BoundaryMode::free) return kAbsent;
    if (auto it = cache.find(u); it != cache.end()) return it->second;
    double value = 0.0;
    std::int32_t slot;
    if (bc_.mode == BoundaryMode::explicit_values) {
      auto it = bc_.values.find(u);
      if (it == bc_.values.end()) {
        missing_.push_back(u);
        slot = -static_cast<std::int32_t>(missing_.size()) - 1;  // -2, -3, ...
        cache.emplace(u, slot);
        return slot;
      }
      value = it->second;
    } else if (bc_.mode == BoundaryMode::constant) {
      value = bc_.constant;
    }
    slot = n + static_cast<std::int32_t>(outside_.size());
    outside_.push_back(u);
    boundary_values_.push_back(value);
    cache.emplace(u, slot);
    return slot;
  }

  void finish() {
    for (std::size_t i = 0; i < vertices_.size(); ++i) (is_boundary_[i] ? boundary_ : interior_).push_back(i);
    const std::size_t n = vertices_.size();
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> rd(n);
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t j = 0; j < width_; ++j) {
        const auto s = slots_[m * width_ + j];
        if (s >= 0 && static_cast<std::size_t>(s) < n)
          rd[static_cast<std::size_t>(s)].emplace_back(static_cast<std::int32_t>(m), static_cast<std::int32_t>(j));
      }
    reader_offsets_.assign(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
      reader_offsets_[k + 1] = reader_offsets_[k] + rd[k].size();
      readers_.insert(readers_.end(), rd[k].begin(), rd[k].end());
    }
  }

  std::size_t dimension_ = 0;
  std::vector<VertexId> vertices_;
  std::map<VertexId, std::size_t> index_;
  std::optional<Neighborhood> neighborhood_;
  BoundaryCondition bc_;
  std::size_t width_ = 0;
  std::size_t origin_slot_ = 0;
  std::vector<std::int32_t> slots_;
  std::vector<char> is_boundary_;
  std::vector<std::size_t> boundary_;
  std::vector<std::size_t> interior_;
  std::vector<VertexId> outside_;
  std::vector<double> boundary_values_;
  std::vector<VertexId> missing_;
  std::vector<std::pair<std::int32_t, std::int32_t>> readers_;
  std::vector<std::size_t> reader_offsets_;
  std::vector<std::int64_t> box_lo_, box_hi_;
  std::optional<std::vector<std::vector<std::size_t>>> adjacency_;
};

using WindowPtr = std::shared_ptr<const Window>;

//! [-L, L]^d with n = (2L+1)^d.
inline Window build_box(std::size_t d, std::int64_t half_width, Neighborhood nbhd, BoundaryCondition bc = {}) {
  if (d < 1) throw std::invalid_argument("build_box: d must be >= 1");
  if (half_width < 0) throw std::invalid_argument("build_box: L must be >= 0");
  if (nbhd.dimension() != d) throw std::invalid_argument("build_box: neighborhood dimension mismatch");
  return Window::box(std::vector<std::int64_t>(d, -half_width), std::vector<std::int64_t>(d, half_width),
                     std::move(nbhd), std::move(bc));
}

//! [0, side-1]^d; for d = 1 this is an interval of `side` sites.
inline Window build_cube(std::size_t d, std::int64_t side, Neighborhood nbhd, BoundaryCondition bc = {}) {
  if (d < 1 || side < 1) throw std::invalid_argument("build_cube: need d >= 1 and side >= 1");
  return Window::box(std::vector<std::int64_t>(d, 0), std::vector<std::int64_t>(d, side - 1), std::move(nbhd),
                     std::move(bc));
}

// ---------------------------------------------------------------------------
// Window-sequence regularity diagnostics

namespace detail {

inline std::int64_t cross(const VertexId& o, const VertexId& a, const VertexId& b) {
  return (a.coords[0] - o.coords[0]) * (b.coords[1] - o.coords[1]) -
         (a.coords[1] - o.coords[1]) * (b.coords[0] - o.coords[0]);
}

// Andrew's monotone chain; counter-clockwise, no collinear points.
inline std::vector<VertexId> convex_hull_2d(std::vector<VertexId> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<VertexId> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace detail

//! Number of lattice points in the convex hull of `vertices`.
inline std::size_t hull_lattice_count(std::span<const VertexId> vertices) {
  if (vertices.empty()) return 0;
  const std::size_t d = vertices.front().dimension();
  std::vector<std::int64_t> lo(d, std::numeric_limits<std::int64_t>::max());
  std::vector<std::int64_t> hi(d, std::numeric_limits<std::int64_t>::min());
  for (const auto& v : vertices)
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], v.coords[a]);
      hi[a] = std::max(hi[a], v.coords[a]);
    }
  std::size_t box_count = 1;
  for (std::size_t a = 0; a < d; ++a) box_count *= static_cast<std::size_t>(hi[a] - lo[a] + 1);
  const std::set<VertexId> distinct(vertices.begin(), vertices.end());
  if (distinct.size() == box_count || d == 1) return box_count;
  if (d != 2) throw std::invalid_argument("convex hull count implemented for d <= 2 or full boxes only");

  const auto hull = detail::convex_hull_2d({vertices.begin(), vertices.end()});
  if (hull.size() < 3) {
    // collinear: lattice points on the segment between the extremes
    const auto dx = std::abs(hull.back().coords[0] - hull.front().coords[0]);
    const auto dy = std::abs(hull.back().coords[1] - hull.front().coords[1]);
    return static_cast<std::size_t>(std::gcd(dx, dy)) + 1;
  }
  std::size_t count = 0;
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x)
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      const VertexId p{x, y};
      bool inside = true;
      for (std::size_t i = 0; i < hull.size() && inside; ++i)
        inside = detail::cross(hull[i], hull[(i + 1) % hull.size()], p) >= 0;
      count += inside;
    }
  return count;
}

//! Lattice inscribed radius: max over k ∈ V of (distance from k to the
//! nearest lattice point outside V) − 1.
inline double inscribed_radius(std::span<const VertexId> vertices) {
  const std::set<VertexId> inside(vertices.begin(), vertices.end());
  if (inside.empty()) return 0.0;
  const std::size_t d = inside.begin()->dimension();
  std::set<VertexId> shell;
  for (const auto& k : inside)
    for (std::size_t a = 0; a < d; ++a)
      for (int s : {-1, 1}) {
        VertexId u = k;
        u.coords[a] += s;
        if (!inside.contains(u)) shell.insert(u);
      }
  std::int64_t best = 0;
  for (const auto& k : inside) {
    std::int64_t nearest = std::numeric_limits<std::int64_t>::max();
    for (const auto& p : shell) {
      std::int64_t d2 = 0;
      for (std::size_t a = 0; a < d; ++a) d2 += (p.coords[a] - k.coords[a]) * (p.coords[a] - k.coords[a]);
      nearest = std::min(nearest, d2);
    }
    best = std::max(best, nearest);
  }
  return std::sqrt(static_cast<double>(best)) - 1.0;
}

struct WindowSequenceRow {
  std::size_t n = 0;
  double hull_ratio = 0.0;
  double inradius = 0.0;
  //! |∂V| / |V|
  double boundary_ratio = 0.0;
  //! |𝒱 + ∂V| / |V|
  double neighborhood_boundary_ratio = 0.0;
};

struct WindowSequenceReport {
  std::vector<WindowSequenceRow> rows;

  //! Least-squares slope of log(boundary_ratio) against log(n); rows with a
  //! zero ratio are skipped.
  double boundary_loglog_slope(bool neighborhood_ratio = false) const {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
      const double y = neighborhood_ratio ? r.neighborhood_boundary_ratio : r.boundary_ratio;
      if (y > 0) pts.emplace_back(std::log(static_cast<double>(r.n)), std::log(y));
    }
    if (pts.size() < 2) return 0.0;
    double mx = 0, my = 0;
    for (auto [x, y] : pts) mx += x, my += y;
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0;
    for (auto [x, y] : pts) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
    return sxy / sxx;
  }
};

inline WindowSequenceRow window_diagnostics(std::span<const VertexId> vertices, const Neighborhood& nbhd) {
  WindowSequenceRow row;
  row.n = vertices.size();
  const auto bd = boundary_of(vertices, nbhd);
  std::set<VertexId> spread;
  for (const auto& b : bd)
    for (const auto& v : nbhd.offsets()) spread.insert(b + v);
  const double n = static_cast<double>(row.n);
  row.hull_ratio = static_cast<double>(hull_lattice_count(vertices)) / n;
  row.inradius = inscribed_radius(vertices);
  row.boundary_ratio = static_cast<double>(bd.size()) / n;
  row.neighborhood_boundary_ratio = static_cast<double>(spread.size()) / n;
  return row;
}

inline WindowSequenceReport h2_diagnostics(std::size_t d, std::span<const std::int64_t> half_widths,
                                           const Neighborhood& nbhd) {
  for (std::size_t i = 1; i < half_widths.size(); ++i)
    if (half_widths[i] <= half_widths[i - 1]) throw std::invalid_argument("h2_diagnostics: L list must increase");
  WindowSequenceReport report;
  for (auto L : half_widths) {
    const Window w = build_box(d, L, nbhd, BoundaryCondition::free());
    report.rows.push_back(window_diagnostics(w.vertices(), nbhd));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const Neighborhood& nbhd) {
  nlohmann::json offs = nlohmann::json::array();
  for (const auto& v : nbhd.offsets()) offs.push_back(v.coords);
  return offs;
}

inline Neighborhood neighborhood_from_json(const nlohmann::json& j, std::size_t d) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nearest") return Neighborhood::nearest(d);
    if (s == "origin") return Neighborhood::origin_only(d);
    throw std::invalid_argument("unknown neighborhood '" + s + "'");
  }
  std::vector<VertexId> offs;
  for (const auto& o : j) offs.emplace_back(o.get<std::vector<std::int64_t>>());
  return Neighborhood(std::move(offs));
}

inline nlohmann::json to_json(const Window& w) {
  nlohmann::json j;
  j["d"] = w.dimension();
  const bool centered = w.is_box() && std::all_of(w.box_lo().begin(), w.box_lo().end(),
                                                  [&](auto v) { return v == w.box_lo()[0]; }) &&
                        std::all_of(w.box_hi().begin(), w.box_hi().end(), [&](auto v) { return v == -w.box_lo()[0]; });
  if (centered) {
    j["L"] = w.box_hi()[0];
  } else {
    nlohmann::json vl = nlohmann::json::array();
    for (const auto& v : w.vertices()) vl.push_back(v.coords);
    j["vertex_list"] = vl;
  }
  if (w.is_lattice()) j["offsets"] = to_json(w.neighborhood());
  if (w.adjacency()) j["adjacency"] = *w.adjacency();
  const auto& bc = w.boundary_condition();
  j["boundary_mode"] = to_string(bc.mode);
  j["boundary_constant"] = bc.constant;
  if (bc.mode == BoundaryMode::explicit_values) {
    nlohmann::json vals = nlohmann::json::array();
    for (const auto& [v, x] : bc.values) vals.push_back({{"vertex", v.coords}, {"value", x}});
    j["boundary_values"] = vals;
  }
  return j;
}

inline Window window_from_json(const nlohmann::json& j) {
  BoundaryCondition bc;
  bc.mode = boundary_mode_from_string(j.value("boundary_mode", std::string("zero")));
  bc.constant = j.value("boundary_constant", 0.0);
  if (bc.mode == BoundaryMode::explicit_values)
    for (const auto& e : j.at("boundary_values"))
      bc.values.emplace(VertexId(e.at("vertex").get<std::vector<std::int64_t>>()), e.at("value").get<double>());
  if (j.contains("adjacency")) {
    const auto adj = j.at("adjacency").get<std::vector<std::vector<std::size_t>>>();
    std::vector<std::size_t> members;
    for (const auto& v : j.at("vertex_list")) members.push_back(v.get<std::vector<std::size_t>>().at(0));
    return Window::from_adjacency(adj, std::move(members), std::move(bc));
  }
  const auto d = j.at("d").get<std::size_t>();
  const Neighborhood nbhd = neighborhood_from_json(j.at("offsets"), d);
  if (j.contains("L")) return build_box(d, j.at("L").get<std::int64_t>(), nbhd, std::move(bc));
  std::vector<VertexId> verts;
  for (const auto& v : j.at("vertex_list")) verts.emplace_back(v.get<std::vector<std::int64_t>>());
  return Window::from_vertices(std::move(verts), nbhd, std::move(bc));
}

}  // namespace gibbsmh
