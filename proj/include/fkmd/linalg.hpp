#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <variant>

namespace fkmd {

// Small fixed-capacity vectors keep the path loop allocation free.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vec scalar_vec(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

/// A coefficient that is either a constant or a function of position. Constant
/// coefficients are detected so hot loops can hoist them.
template <typename T>
class Coefficient {
 public:
  using Function = std::function<T(const Vec&)>;

  Coefficient() = default;
  Coefficient(T value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Coefficient(Function fn) : value_(std::move(fn)) {}  // NOLINT(google-explicit-constructor)

  T operator()(const Vec& x) const {
    if (const auto* c = std::get_if<T>(&value_)) return *c;
    return std::get<Function>(value_)(x);
  }

  [[nodiscard]] bool is_constant() const { return std::holds_alternative<T>(value_); }
  [[nodiscard]] const T& constant() const { return std::get<T>(value_); }

 private:
  std::variant<T, Function> value_{T{}};
};

using ScalarField = Coefficient<double>;
using VectorField = Coefficient<Vec>;
using MatrixField = Coefficient<Mat>;

inline bool is_zero(const ScalarField& c) { return c.is_constant() && c.constant() == 0.0; }
inline bool is_zero(const VectorField& c) {
  return c.is_constant() && (c.constant().size() == 0 || c.constant().isZero(0.0));
}

}  // namespace fkmd
