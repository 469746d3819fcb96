#pragma once

#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <variant>

namespace fkmd {

struct Interval {
  double a;
  double b;
};

struct Ball {
  Vec center;
  double radius;
};

struct Box {
  Vec lo;
  Vec hi;
};

struct FullSpace {
  int dim;
};

/// Supporting half-space {y : <normal, y> <= offset} of the boundary face
/// nearest to a point. `offset - <normal, y>` is the distance of y to the face.
struct Face {
  Vec normal;
  double offset;

  [[nodiscard]] double distance(const Vec& y) const { return offset - normal.dot(y); }
};

class Domain {
 public:
  using Shape = std::variant<Interval, Ball, Box, FullSpace>;

  static Domain interval(double a, double b) {
    require(a < b, "interval requires a < b");
    return Domain(Interval{a, b});
  }

  static Domain ball(Vec center, double radius) {
    require(radius > 0.0, "ball requires radius > 0");
    require(center.size() >= 1 && center.size() <= kMaxDim, "ball dimension out of range");
    return Domain(Ball{std::move(center), radius});
  }

  static Domain box(Vec lo, Vec hi) {
    require(lo.size() == hi.size() && lo.size() >= 1 && lo.size() <= kMaxDim, "box corners must share a dimension in [1, 4]");
    require((lo.array() < hi.array()).all(), "box requires lo < hi componentwise");
    return Domain(Box{std::move(lo), std::move(hi)});
  }

  static Domain full_space(int dim) {
    require(dim >= 1 && dim <= kMaxDim, "full space dimension out of range");
    return Domain(FullSpace{dim});
  }

  [[nodiscard]] const Shape& shape() const { return shape_; }

  [[nodiscard]] int dim() const {
    return std::visit(
        [](const auto& s) -> int {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) return 1;
          else if constexpr (std::is_same_v<S, Ball>) return static_cast<int>(s.center.size());
          else if constexpr (std::is_same_v<S, Box>) return static_cast<int>(s.lo.size());
          else return s.dim;
        },
        shape_);
  }

  [[nodiscard]] bool bounded() const { return !std::holds_alternative<FullSpace>(shape_); }

  /// Membership in the open set.
  [[nodiscard]] bool contains(const Vec& x) const {
    return std::visit(
        [&](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) return x[0] > s.a && x[0] < s.b;
          else if constexpr (std::is_same_v<S, Ball>) return (x - s.center).squaredNorm() < s.radius * s.radius;
          else if constexpr (std::is_same_v<S, Box>) return (x.array() > s.lo.array()).all() && (x.array() < s.hi.array()).all();
          else return true;
        },
        shape_);
  }

  [[nodiscard]] bool contains_closed(const Vec& x) const {
    return std::visit(
        [&](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) return x[0] >= s.a && x[0] <= s.b;
          else if constexpr (std::is_same_v<S, Ball>) return (x - s.center).squaredNorm() <= s.radius * s.radius;
          else if constexpr (std::is_same_v<S, Box>) return (x.array() >= s.lo.array()).all() && (x.array() <= s.hi.array()).all();
          else return true;
        },
        shape_);
  }

  /// Boundary face nearest to x. Unbounded domains have no face; the returned
  /// half-space is at infinite distance.
  [[nodiscard]] Face nearest_face(const Vec& x) const {
    return std::visit(
        [&](const auto& s) -> Face {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) {
            if (x[0] - s.a < s.b - x[0]) return Face{scalar_vec(-1.0), -s.a};
            return Face{scalar_vec(1.0), s.b};
          } else if constexpr (std::is_same_v<S, Ball>) {
            Vec n = x - s.center;
            const double r = n.norm();
            if (r == 0.0) {
              n.setZero();
              n[0] = 1.0;
            } else {
              n /= r;
            }
            return Face{n, s.radius + n.dot(s.center)};
          } else if constexpr (std::is_same_v<S, Box>) {
            double best = std::numeric_limits<double>::infinity();
            Face face{Vec::Zero(x.size()), 0.0};
            for (Eigen::Index i = 0; i < x.size(); ++i) {
              if (x[i] - s.lo[i] < best) {
                best = x[i] - s.lo[i];
                face.normal.setZero();
                face.normal[i] = -1.0;
                face.offset = -s.lo[i];
              }
              if (s.hi[i] - x[i] < best) {
                best = s.hi[i] - x[i];
                face.normal.setZero();
                face.normal[i] = 1.0;
                face.offset = s.hi[i];
              }
            }
            return face;
          } else {
            Vec n = Vec::Zero(s.dim);
            n[0] = 1.0;
            return Face{n, std::numeric_limits<double>::infinity()};
          }
        },
        shape_);
  }

  [[nodiscard]] double distance_to_boundary(const Vec& x) const { return nearest_face(x).distance(x); }

  /// Axis-aligned bounding box of a bounded domain.
  [[nodiscard]] std::pair<Vec, Vec> bounding_box() const {
    return std::visit(
        [](const auto& s) -> std::pair<Vec, Vec> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) return {scalar_vec(s.a), scalar_vec(s.b)};
          else if constexpr (std::is_same_v<S, Ball>) {
            Vec r = Vec::Constant(s.center.size(), s.radius);
            return {s.center - r, s.center + r};
          } else if constexpr (std::is_same_v<S, Box>) return {s.lo, s.hi};
          else throw Error(ErrorCode::invalid_argument, "full space has no bounding box");
        },
        shape_);
  }

  [[nodiscard]] std::string describe() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) return "interval(" + std::to_string(s.a) + ", " + std::to_string(s.b) + ")";
          else if constexpr (std::is_same_v<S, Ball>) return "ball(r=" + std::to_string(s.radius) + ")";
          else if constexpr (std::is_same_v<S, Box>) return "box";
          else return "full_space(" + std::to_string(s.dim) + ")";
        },
        shape_);
  }

 private:
  explicit Domain(Shape shape) : shape_(std::move(shape)) {}

  Shape shape_;
};

}  // namespace fkmd
