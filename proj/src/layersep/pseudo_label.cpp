#include "arspl/layersep/pseudo_label.hpp"

#include "arspl/layersep/morphology.hpp"
#include "arspl/layersep/rpca.hpp"

namespace arspl::layersep {

PseudoLabel generate_pseudo_label(const GraySequence& seq, const PseudoLabelConfig& config) {
  const GraySequence diff = difference_sequence(seq, config.disk_diameter);
  const Eigen::MatrixXd d = sequence_matrix(diff);
  RpcaConfig rpca = default_rpca_config(d.rows(), config.xi_scale);
  rpca.tol = config.tol;
  rpca.max_iter = config.max_iter;
  rpca.rho = config.rho;
  const LayerPair layers = rpca_ialm(d, rpca);

  PseudoLabel out;
  out.vesselness = vesselness_from_layer(layers, seq.key_frame_index, seq.width(), seq.height());
  OtsuResult otsu = otsu_threshold(out.vesselness);
  out.labels = std::move(otsu.labels);
  out.otsu_degenerate = otsu.degenerate;
  out.rpca_iterations = layers.iterations;
  out.rpca_residual = layers.residual;
  out.rpca_converged = layers.converged;
  return out;
}

}  // namespace arspl::layersep
