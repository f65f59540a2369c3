#include "arspl/layersep/rpca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "arspl/core/error.hpp"

namespace arspl::layersep {

namespace {

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& x, double t) {
  return x.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

// Singular value thresholding: U * max(Sigma - t, 0) * V^T.
Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& x, double t) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::kSvdFailure, "SVD failed during RPCA");
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) > t) ++keep;
  if (keep == 0) return Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const Eigen::VectorXd shrunk = (s.head(keep).array() - t).matrix();
  return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

double largest_singular_value(const Eigen::MatrixXd& x) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::kSvdFailure, "SVD failed on RPCA input");
  return svd.singularValues()(0);
}

}  // namespace

RpcaConfig default_rpca_config(Eigen::Index n_pixels, double xi_scale) {
  RpcaConfig cfg;
  cfg.xi = xi_scale / std::sqrt(static_cast<double>(n_pixels));
  return cfg;
}

Eigen::MatrixXd sequence_matrix(const GraySequence& seq) {
  const Eigen::Index n = static_cast<Eigen::Index>(seq.frames.front().data.size());
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(seq.frames.size()));
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    m.col(static_cast<Eigen::Index>(t)) = Eigen::Map<const Eigen::VectorXd>(seq.frames[t].data.data(), n);
  }
  return m;
}

LayerPair rpca_ialm(const Eigen::MatrixXd& d, const RpcaConfig& config) {
  if (!(config.xi > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RPCA xi must be > 0");
  if (!(config.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RPCA tol must be > 0");
  if (config.max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "RPCA max_iter must be >= 1");
  if (!(config.rho > 1.0)) throw Error(ErrorCode::kInvalidArgument, "RPCA rho must be > 1");
  if (d.size() == 0) throw Error(ErrorCode::kInvalidArgument, "RPCA input is empty");
  if (!d.allFinite()) throw Error(ErrorCode::kInvalidArgument, "RPCA input has non-finite entries");

  LayerPair out;
  out.low_rank = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  out.sparse = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  const double d_norm = d.norm();
  if (d_norm == 0.0) {
    out.iterations = 1;
    out.converged = true;
    out.residual_history.push_back(0.0);
    return out;
  }

  const double sigma1 = largest_singular_value(d);
  const double dual_scale = std::max(sigma1, d.cwiseAbs().maxCoeff() / config.xi);
  Eigen::MatrixXd y = d / dual_scale;
  double mu = config.mu0.value_or(1.25 / sigma1);
  if (!(mu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RPCA mu0 must be > 0");
  const double mu_bar = mu * 1e7;

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    out.low_rank = singular_value_threshold(d - out.sparse + y / mu, 1.0 / mu);
    out.sparse = soft_threshold(d - out.low_rank + y / mu, config.xi / mu);
    const Eigen::MatrixXd z = d - out.low_rank - out.sparse;
    y += mu * z;
    mu = std::min(mu * config.rho, mu_bar);
    out.iterations = iter;
    out.residual = z.norm() / d_norm;
    out.residual_history.push_back(out.residual);
    if (out.residual <= config.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace arspl::layersep
