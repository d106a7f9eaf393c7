#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace cfgtn {

class RandomStream;

/// Number of free angles for a p x p correlation matrix.
constexpr std::size_t angle_count(int p) { return static_cast<std::size_t>(p) * (p - 1) / 2; }

/// Dimension p implied by an angle count; throws DomainError if none exists.
int dimension_from_angle_count(std::size_t count);

/// Hyperspherical angles of a Cholesky factor, row-major: theta_21, theta_31,
/// theta_32, ..., theta_{p,p-1}. Every angle lies in (0, pi).
class AngleVector {
 public:
  AngleVector() = default;
  /// Validates the count and the open-interval constraint.
  explicit AngleVector(std::vector<double> angles);
  /// All angles pi/2, i.e. the identity correlation.
  static AngleVector identity(int p);

  int dimension() const { return p_; }
  std::size_t size() const { return angles_.size(); }
  const std::vector<double>& values() const { return angles_; }
  double operator[](std::size_t i) const { return angles_[i]; }

  friend bool operator==(const AngleVector&, const AngleVector&) = default;

 private:
  std::vector<double> angles_;
  int p_ = 0;
};

/// Lower-triangular factor with unit-norm rows and a positive diagonal.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  explicit CholeskyFactor(Eigen::MatrixXd lower);

  int dimension() const { return static_cast<int>(lower_.rows()); }
  const Eigen::MatrixXd& matrix() const { return lower_; }
  /// Sum of log diagonal entries, i.e. half the log-determinant of R.
  double half_log_det() const;

 private:
  Eigen::MatrixXd lower_;
};

/// Symmetric, unit-diagonal, positive semi-definite matrix.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;
  /// Validates symmetry, unit diagonal and entry range (tolerance 1e-10).
  explicit CorrelationMatrix(Eigen::MatrixXd entries);
  static CorrelationMatrix identity(int p);
  /// Every off-diagonal entry equal to rho.
  static CorrelationMatrix exchangeable(int p, double rho);

  int dimension() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }

 private:
  Eigen::MatrixXd entries_;
};

inline constexpr double kAngleFloor = 1e-6;

CholeskyFactor angles_to_cholesky(const AngleVector& theta);
CorrelationMatrix cholesky_to_correlation(const CholeskyFactor& factor);
/// Requires R positive definite (Cholesky succeeds with pivots above 1e-12).
AngleVector correlation_to_angles(const CorrelationMatrix& R);
/// Cholesky factor of a positive definite correlation matrix.
CholeskyFactor correlation_to_cholesky(const CorrelationMatrix& R);

inline CorrelationMatrix angles_to_correlation(const AngleVector& theta) {
  return cholesky_to_correlation(angles_to_cholesky(theta));
}

/// Smallest eigenvalue of R.
double min_eigenvalue(const CorrelationMatrix& R);

/// Random valid correlation matrix: angles uniform on (0.3, pi - 0.3).
AngleVector random_angles(int p, RandomStream& stream);

/// Clamp every angle to [kAngleFloor, pi - kAngleFloor]; reports whether any moved.
AngleVector clamp_angles(const std::vector<double>& angles, bool* clamped = nullptr);

}  // namespace cfgtn
