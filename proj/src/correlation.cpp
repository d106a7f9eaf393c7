#include "cfgtn/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cfgtn/errors.hpp"
#include "cfgtn/rng.hpp"

namespace cfgtn {

int dimension_from_angle_count(std::size_t count) {
  for (int p = 2; angle_count(p) <= count; ++p) {
    if (angle_count(p) == count) return p;
  }
  throw DomainError("angle count " + std::to_string(count) + " is not p(p-1)/2 for any p >= 2");
}

AngleVector::AngleVector(std::vector<double> angles) : angles_(std::move(angles)) {
  p_ = dimension_from_angle_count(angles_.size());
  for (double a : angles_) {
    if (!(a > 0.0 && a < std::numbers::pi)) {
      throw DomainError("angle " + std::to_string(a) + " outside (0, pi)");
    }
  }
}

AngleVector AngleVector::identity(int p) {
  return AngleVector(std::vector<double>(angle_count(p), 0.5 * std::numbers::pi));
}

CholeskyFactor::CholeskyFactor(Eigen::MatrixXd lower) : lower_(std::move(lower)) {
  if (lower_.rows() != lower_.cols() || lower_.rows() < 1) {
    throw DomainError("Cholesky factor must be square");
  }
}

double CholeskyFactor::half_log_det() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
  return s;
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const auto p = entries_.rows();
  if (p != entries_.cols() || p < 1) throw DomainError("correlation matrix must be square");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(entries_(i, i) - 1.0) > 1e-10) {
      throw DomainError("correlation matrix diagonal must be 1");
    }
    entries_(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(entries_(i, j) - entries_(j, i)) > 1e-10) {
        throw DomainError("correlation matrix must be symmetric");
      }
      if (std::abs(entries_(i, j)) > 1.0 + 1e-10) {
        throw DomainError("correlation entries must lie in [-1, 1]");
      }
    }
  }
}

CorrelationMatrix CorrelationMatrix::identity(int p) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(p, p));
}

CorrelationMatrix CorrelationMatrix::exchangeable(int p, double rho) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Constant(p, p, rho);
  R.diagonal().setOnes();
  return CorrelationMatrix(std::move(R));
}

CholeskyFactor angles_to_cholesky(const AngleVector& theta) {
  const int p = theta.dimension();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(p, p);
  L(0, 0) = 1.0;
  std::size_t idx = 0;
  for (int i = 1; i < p; ++i) {
    double sine_product = 1.0;
    for (int j = 0; j < i; ++j) {
      const double angle = theta[idx++];
      L(i, j) = std::cos(angle) * sine_product;
      sine_product *= std::sin(angle);
    }
    L(i, i) = sine_product;
  }
  return CholeskyFactor(std::move(L));
}

CorrelationMatrix cholesky_to_correlation(const CholeskyFactor& factor) {
  const auto& L = factor.matrix();
  Eigen::MatrixXd R = L * L.transpose();
  // Rows have unit norm up to rounding; pin the diagonal and symmetry exactly.
  R.diagonal().setOnes();
  R = 0.5 * (R + R.transpose()).eval();
  return CorrelationMatrix(std::move(R));
}

CholeskyFactor correlation_to_cholesky(const CorrelationMatrix& R) {
  Eigen::LLT<Eigen::MatrixXd> llt(R.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("correlation matrix is not positive definite");
  }
  Eigen::MatrixXd L = llt.matrixL();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (L(i, i) * L(i, i) < 1e-12) {
      throw SingularMatrixError("correlation matrix is numerically singular");
    }
  }
  return CholeskyFactor(std::move(L));
}

AngleVector correlation_to_angles(const CorrelationMatrix& R) {
  const CholeskyFactor factor = correlation_to_cholesky(R);
  const auto& L = factor.matrix();
  const int p = R.dimension();
  std::vector<double> angles;
  angles.reserve(angle_count(p));
  for (int i = 1; i < p; ++i) {
    double sine_product = 1.0;
    for (int j = 0; j < i; ++j) {
      if (sine_product < 1e-12) {
        angles.push_back(0.5 * std::numbers::pi);
        continue;
      }
      const double c = std::clamp(L(i, j) / sine_product, -1.0, 1.0);
      const double angle = std::acos(c);
      angles.push_back(angle);
      sine_product *= std::sin(angle);
    }
  }
  return clamp_angles(angles);
}

double min_eigenvalue(const CorrelationMatrix& R) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(R.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

AngleVector random_angles(int p, RandomStream& stream) {
  std::vector<double> angles(angle_count(p));
  for (double& a : angles) a = 0.3 + (std::numbers::pi - 0.6) * stream.uniform();
  return AngleVector(std::move(angles));
}

AngleVector clamp_angles(const std::vector<double>& angles, bool* clamped) {
  std::vector<double> out(angles);
  bool moved = false;
  for (double& a : out) {
    const double c = std::clamp(a, kAngleFloor, std::numbers::pi - kAngleFloor);
    moved = moved || c != a;
    a = c;
  }
  if (clamped) *clamped = moved;
  return AngleVector(std::move(out));
}

}  // namespace cfgtn
