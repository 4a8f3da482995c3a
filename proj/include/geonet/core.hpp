#pragma once

// Shared vocabulary: small fixed-size linear algebra types, chart points,
// tolerances and the error type thrown by every module.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geonet {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// A point of the manifold given in one of its charts.
struct ChartPoint {
  int chart = 0;
  Vec2 x = Vec2::Zero();

  ChartPoint() = default;
  ChartPoint(int c, Vec2 p) : chart(c), x(std::move(p)) {}
};

/// Christoffel symbols of the second kind, gamma[k](i, j) = Γ^k_ij.
struct Christoffel {
  std::array<Mat2, 2> gamma{Mat2::Zero(), Mat2::Zero()};

  /// Γ^k_ij a^i b^j for both k.
  Vec2 contract(const Vec2& a, const Vec2& b) const {
    return {a.dot(gamma[0] * b), a.dot(gamma[1] * b)};
  }
};

/// Numerical thresholds shared by the net, solver and surgery modules.
struct Tolerances {
  double stat = 1e-8;   // balancing defect norm
  double null = 1e-6;   // relative eigenvalue for null directions
  double par = 1e-4;    // parallelism residual per unit length
  double geo = 1e-5;    // geometric coincidence decisions
};

enum class ErrorKind {
  InvalidInput,
  OutsideDomain,
  NotPositiveDefinite,
  DegenerateEdge,
  OutsideUniqueness,
  NoConvergence,
  StepUnderflow,
  EdgeCollapse,
  AmbiguousGeometry,
  NotStationary,
  Degeneration,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::OutsideDomain: return "outside chart domain";
    case ErrorKind::NotPositiveDefinite: return "metric not positive definite";
    case ErrorKind::DegenerateEdge: return "degenerate edge";
    case ErrorKind::OutsideUniqueness: return "outside uniqueness regime";
    case ErrorKind::NoConvergence: return "no convergence";
    case ErrorKind::StepUnderflow: return "step-size underflow";
    case ErrorKind::EdgeCollapse: return "edge collapse";
    case ErrorKind::AmbiguousGeometry: return "ambiguous geometry";
    case ErrorKind::NotStationary: return "non-stationary input";
    case ErrorKind::Degeneration: return "degeneration";
  }
  return "unknown";
}

/// True for failures caused by bad input rather than by numerics.
inline bool is_input_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput:
    case ErrorKind::OutsideDomain:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::DegenerateEdge:
    case ErrorKind::NotStationary:
      return true;
    default:
      return false;
  }
}

/// Every failure carries its kind and the "module::operation" it came from.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string origin, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + " [" + origin + "]: " + detail),
        kind_(kind),
        origin_(std::move(origin)),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& origin() const noexcept { return origin_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string origin_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string origin, const std::string& detail) {
  throw Error(kind, std::move(origin), detail);
}

/// Squared norm of v under the metric matrix g.
inline double norm2(const Mat2& g, const Vec2& v) { return v.dot(g * v); }
inline double norm(const Mat2& g, const Vec2& v) { return std::sqrt(std::max(0.0, norm2(g, v))); }

}  // namespace geonet
