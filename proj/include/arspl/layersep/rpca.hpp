#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "arspl/core/image.hpp"

namespace arspl::layersep {

struct RpcaConfig {
  double xi = 0.0;  // sparsity weight; must be > 0
  double tol = 1e-6;
  int max_iter = 500;
  std::optional<double> mu0;  // defaults to 1.25 / sigma_1(D)
  double rho = 1.5;
};

// xi = xi_scale / sqrt(n_pixels).
RpcaConfig default_rpca_config(Eigen::Index n_pixels, double xi_scale = 0.8);

struct LayerPair {
  Eigen::MatrixXd low_rank;  // background layer, pixels x frames
  Eigen::MatrixXd sparse;    // vessel layer
  double residual = 0.0;     // ||D - L - S||_F / ||D||_F at exit
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

// Pixels x frames: column t holds frame t in row-major pixel order.
Eigen::MatrixXd sequence_matrix(const GraySequence& seq);

// Robust PCA, min ||L||_* + xi ||S||_1 s.t. D = L + S, by the inexact
// augmented Lagrange multiplier method. Each sweep thresholds the singular
// values of D - S + Y/mu at 1/mu, soft-thresholds D - L + Y/mu at xi/mu, then
// Y += mu (D - L - S) and mu = min(rho mu, 1e7 mu0). Stops when the relative
// residual reaches tol; otherwise returns with converged = false.
LayerPair rpca_ialm(const Eigen::MatrixXd& d, const RpcaConfig& config);

}  // namespace arspl::layersep
