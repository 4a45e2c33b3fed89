#include <Eigen/Dense>

#include <cmath>
#include <cstdio>

#include "dmtl/grouping.hpp"

namespace dmtl::grouping {

Projection project_2d(const data::FeatureMatrix& features) {
  const auto n = static_cast<Eigen::Index>(features.entity_count());
  const auto d = static_cast<Eigen::Index>(features.dim());
  if (n < 2) throw DomainError("project_2d needs at least 2 entities, got " + std::to_string(n));
  if (d < 2) throw ShapeError("project_2d needs feature dimension >= 2, got " + std::to_string(d));

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = features.row(static_cast<std::size_t>(r));
    for (Eigen::Index c = 0; c < d; ++c) x(r, c) = row[static_cast<std::size_t>(c)];
  }
  x.rowwise() -= x.colwise().mean();

  // Eigen-decompose whichever of X X^T and X^T X is smaller.
  Eigen::MatrixXd scores(n, 2);
  Eigen::Vector2d lambda;
  if (n <= d) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * x.transpose());
    for (int k = 0; k < 2; ++k) {
      const Eigen::Index idx = n - 1 - k;
      lambda(k) = std::max(0.0, eig.eigenvalues()(idx));
      scores.col(k) = eig.eigenvectors().col(idx) * std::sqrt(lambda(k));
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
    for (int k = 0; k < 2; ++k) {
      const Eigen::Index idx = d - 1 - k;
      lambda(k) = std::max(0.0, eig.eigenvalues()(idx));
      scores.col(k) = x * eig.eigenvectors().col(idx);
    }
  }

  Projection out;
  out.x.resize(static_cast<std::size_t>(n));
  out.y.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < 2; ++k) {
    // Orient each axis so its largest-magnitude score is positive.
    Eigen::Index arg = 0;
    scores.col(k).cwiseAbs().maxCoeff(&arg);
    if (scores(arg, k) < 0.0) scores.col(k) *= -1.0;
    out.variance[k] = lambda(k) / static_cast<double>(n);
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    out.x[static_cast<std::size_t>(r)] = scores(r, 0);
    out.y[static_cast<std::size_t>(r)] = scores(r, 1);
  }
  return out;
}

std::string projection_csv(const Projection& projection, const GroupAssignment& assignment, const data::IndexMap& users) {
  std::string out = "user_id,group,x,y\n";
  char buf[96];
  for (std::size_t u = 0; u < projection.x.size(); ++u) {
    std::snprintf(buf, sizeof buf, ",%u,%.17g,%.17g\n", static_cast<unsigned>(assignment.labels.at(u)),
                  projection.x[u], projection.y[u]);
    out += users.id_of(u);
    out += buf;
  }
  return out;
}

}  // namespace dmtl::grouping
