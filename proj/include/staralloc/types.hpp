#ifndef STARALLOC_TYPES_HPP
#define STARALLOC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace staralloc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kLn2 = 0.69314718055994530942;

inline constexpr const char* kVersion = "0.1.0";

// A subproblem has no feasible point (e.g. the QoS target cannot be met).
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::string constraint)
      : std::runtime_error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

// Solver broke down numerically (ill-conditioning, stalled line search).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An instance exceeds a hard size guard (factorial/exponential search space).
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace staralloc

#endif
