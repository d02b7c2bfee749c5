// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include "shadowgrid/error.hpp"
#include "shadowgrid/models/baselines.hpp"

namespace shadowgrid {

void LinearRegression::fit(const Eigen::Ref<const RowMatrixXd>& x, const Eigen::Ref<const VectorXd>& y, double ridge) {
  if (x.rows() == 0) throw Error(ErrorKind::EmptyTrainingSet, "linear regression needs at least one row");
  if (x.rows() != y.size()) throw Error(ErrorKind::ShapeMismatch, "rows of X and y differ");
  if (ridge < 0.0) throw Error(ErrorKind::InvalidConfig, "ridge must be >= 0");

  const Eigen::RowVectorXd mean_x = x.colwise().mean();
  const double mean_y = y.mean();
  std::vector<Index> active;
  for (Index j = 0; j < x.cols(); ++j) {
    if ((x.col(j).array() != x(0, j)).any()) active.push_back(j);
  }
  weights_ = VectorXd::Zero(x.cols());
  if (!active.empty()) {
    const auto k = static_cast<Index>(active.size());
    RowMatrixXd xc(x.rows(), k);
    for (Index j = 0; j < k; ++j) xc.col(j) = x.col(active[j]).array() - mean_x(active[j]);
    const VectorXd yc = y.array() - mean_y;
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += ridge;
    const VectorXd rhs = xc.transpose() * yc;
    VectorXd w;
    if (ridge > 0.0) {
      w = gram.ldlt().solve(rhs);
    } else {
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
      if (qr.rank() < k) {
        throw Error(ErrorKind::SingularSystem,
                    fmt::format("normal equations have rank {} for {} active features", qr.rank(), k));
      }
      w = qr.solve(rhs);
    }
    if (!w.allFinite()) throw Error(ErrorKind::SingularSystem, "normal equations produced non-finite weights");
    for (Index j = 0; j < k; ++j) weights_(active[j]) = w(j);
  }
  bias_ = mean_y - mean_x.dot(weights_);
}

VectorXd LinearRegression::predict(const Eigen::Ref<const RowMatrixXd>& x) const {
  if (x.cols() != weights_.size()) throw Error(ErrorKind::ShapeMismatch, "feature count differs from the fit");
  return (x * weights_).array() + bias_;
}

}  // namespace shadowgrid
