#pragma once

#include <Eigen/Dense>

namespace msod::detail {

struct IpmResult {
  Eigen::VectorXd weights;  // nonnegative, sums to 1 (before cap cleanup)
  Eigen::MatrixXd dual;     // PSD, unit trace: certifies a lower bound
  int iterations = 0;
  bool converged = false;
};

// Minimizes lambda_max(sum_t v_t a_t a_t^T) over {0 <= v <= cap, sum v = 1}
// where a_t are the columns of `factors` (r x T, r >= 1). Uses the
// homogeneous form
//   maximize 1^T y  s.t.  I - sum_t y_t a_t a_t^T >= 0,
//                         y >= 0,  cap * 1^T y - y_t >= 0,
// whose solution gives v = y / 1^T y and lambda* = 1 / 1^T y, solved by an
// infeasible primal-dual path-following method (HKM direction, Mehrotra
// predictor-corrector). Requires cap * T > 1 and a bounded problem.
IpmResult solve_capped_lambda_max(const Eigen::MatrixXd& factors, double cap,
                                  int max_iterations = 200);

}  // namespace msod::detail
