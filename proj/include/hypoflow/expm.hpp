#pragma once

#include <Eigen/Dense>

namespace hypoflow {

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant of degree 3, 5, 7, 9 or 13 chosen from the 1-norm
/// (Higham 2005 thresholds). Degree 13 covers every matrix with
/// ||A||_1 above 2.1.
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

}  // namespace hypoflow
