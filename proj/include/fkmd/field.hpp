#pragma once

#include "fkmd/domain.hpp"
#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace fkmd {

/// Uniform tensor grid with n nodes per axis on [lo, hi]; node 0 at lo.
/// Flat indices run with axis 0 fastest.
class Grid {
 public:
  using MultiIndex = std::array<int, kMaxDim>;

  Grid(Vec lo, Vec hi, int n) : lo_(std::move(lo)), hi_(std::move(hi)), n_(n) {
    require(lo_.size() == hi_.size() && lo_.size() >= 1, "grid corners must share a dimension");
    require((lo_.array() < hi_.array()).all(), "grid requires lo < hi");
    require(n_ >= 2, "grid needs at least 2 nodes per axis");
    h_ = (hi_ - lo_) / static_cast<double>(n_ - 1);
    size_ = 1;
    for (int i = 0; i < dim(); ++i) size_ *= static_cast<std::size_t>(n_);
  }

  static Grid over(const Domain& domain, int n) {
    auto [lo, hi] = domain.bounding_box();
    return Grid(std::move(lo), std::move(hi), n);
  }

  [[nodiscard]] int dim() const { return static_cast<int>(lo_.size()); }
  [[nodiscard]] int nodes_per_axis() const { return n_; }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] const Vec& lo() const { return lo_; }
  [[nodiscard]] const Vec& hi() const { return hi_; }
  [[nodiscard]] const Vec& spacing() const { return h_; }

  /// Volume of one grid cell.
  [[nodiscard]] double cell_volume() const { return h_.prod(); }

  [[nodiscard]] MultiIndex multi_index(std::size_t flat) const {
    MultiIndex mi{};
    for (int a = 0; a < dim(); ++a) {
      mi[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(n_));
      flat /= static_cast<std::size_t>(n_);
    }
    return mi;
  }

  [[nodiscard]] std::size_t flat_index(const MultiIndex& mi) const {
    std::size_t flat = 0;
    for (int a = dim() - 1; a >= 0; --a) flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(mi[static_cast<std::size_t>(a)]);
    return flat;
  }

  [[nodiscard]] Vec point(std::size_t flat) const {
    const auto mi = multi_index(flat);
    Vec x(dim());
    for (int a = 0; a < dim(); ++a) x[a] = lo_[a] + h_[a] * mi[static_cast<std::size_t>(a)];
    return x;
  }

  [[nodiscard]] std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n_);
    return s;
  }

  /// Same box, different resolution.
  [[nodiscard]] Grid refined(int n) const { return Grid(lo_, hi_, n); }

  /// Calls visit(flat, weight) for the 2^d multilinear weights of x; x is
  /// clamped into the box.
  template <typename Visit>
  void for_each_weight(const Vec& x, Visit&& visit) const {
    const int d = dim();
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    for (int a = 0; a < d; ++a) {
      double t = (x[a] - lo_[a]) / h_[a];
      t = std::clamp(t, 0.0, static_cast<double>(n_ - 1));
      int i = std::min(static_cast<int>(t), n_ - 2);
      base[static_cast<std::size_t>(a)] = i;
      frac[static_cast<std::size_t>(a)] = t - i;
    }
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      for (int a = d - 1; a >= 0; --a) {
        const bool up = (corner >> a) & 1;
        const auto sa = static_cast<std::size_t>(a);
        w *= up ? frac[sa] : 1.0 - frac[sa];
        flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(base[sa] + (up ? 1 : 0));
      }
      visit(flat, w);
    }
  }

 private:
  Vec lo_;
  Vec hi_;
  Vec h_;
  int n_;
  std::size_t size_ = 0;
};

/// Grid-sampled function with multilinear interpolation. On a bounded domain
/// the value is 0 outside the open domain (Dirichlet exterior condition) and
/// nodes outside the open domain hold 0; on the full space the grid box is
/// extended by clamping.
class SolutionField {
 public:
  SolutionField(Grid grid, Domain domain) : grid_(std::move(grid)), domain_(std::move(domain)), values_(grid_.size(), 0.0) {
    require(grid_.dim() == domain_.dim(), "grid and domain dimensions differ");
  }

  SolutionField(Grid grid, Domain domain, std::vector<double> values)
      : grid_(std::move(grid)), domain_(std::move(domain)), values_(std::move(values)) {
    require(grid_.dim() == domain_.dim(), "grid and domain dimensions differ");
    require(values_.size() == grid_.size(), "field value count does not match the grid");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(std::isfinite(values_[i]), "field values must be finite");
      if (!node_active(i)) values_[i] = 0.0;
    }
  }

  template <typename F>
  static SolutionField from_function(Grid grid, Domain domain, F&& fn) {
    SolutionField u(std::move(grid), std::move(domain));
    for (std::size_t i = 0; i < u.values_.size(); ++i)
      if (u.node_active(i)) u.values_[i] = fn(u.grid_.point(i));
    return u;
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

  void set(std::size_t i, double v) {
    if (node_active(i)) values_[i] = v;
  }

  /// Nodes where the solution is unknown (inside the open domain).
  [[nodiscard]] bool node_active(std::size_t i) const { return !domain_.bounded() || domain_.contains(grid_.point(i)); }

  [[nodiscard]] double operator()(const Vec& x) const {
    if (domain_.bounded() && !domain_.contains(x)) return 0.0;
    if (grid_.dim() == 1) {
      const double h = grid_.spacing()[0];
      const int n = grid_.nodes_per_axis();
      double t = std::clamp((x[0] - grid_.lo()[0]) / h, 0.0, static_cast<double>(n - 1));
      const int i = std::min(static_cast<int>(t), n - 2);
      t -= i;
      return (1.0 - t) * values_[static_cast<std::size_t>(i)] + t * values_[static_cast<std::size_t>(i + 1)];
    }
    double s = 0.0;
    grid_.for_each_weight(x, [&](std::size_t flat, double w) { s += w * values_[flat]; });
    return s;
  }

  [[nodiscard]] double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Nodewise map, e.g. truncation T_k.
  template <typename F>
  [[nodiscard]] SolutionField map(F&& fn) const {
    SolutionField out = *this;
    for (std::size_t i = 0; i < out.values_.size(); ++i)
      if (node_active(i)) out.values_[i] = fn(out.values_[i]);
    return out;
  }

 private:
  Grid grid_;
  Domain domain_;
  std::vector<double> values_;
};

}  // namespace fkmd
