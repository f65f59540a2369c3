#include "network.hpp"

#include <algorithm>
#include <cmath>

#include "arspl/core/error.hpp"
#include "arspl/core/rng.hpp"

namespace arspl::segmodel::detail {

namespace {

using ConstMap = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

void im2col3(const RowMat& in, int h, int w, RowMat& col) {
  const int channels = static_cast<int>(in.rows());
  const int hw = h * w;
  col.resize(channels * 9, hw);
  for (int c = 0; c < channels; ++c) {
    const double* src = in.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          double* drow = dst + y * w;
          if (sy < 0 || sy >= h) {
            std::fill(drow, drow + w, 0.0);
            continue;
          }
          const double* srow = src + sy * w;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            drow[x] = (sx >= 0 && sx < w) ? srow[sx] : 0.0;
          }
        }
      }
    }
  }
}

void col2im3(const RowMat& col, int h, int w, RowMat& out) {
  const int channels = static_cast<int>(col.rows() / 9);
  out.setZero(channels, h * w);
  for (int c = 0; c < channels; ++c) {
    double* dst = out.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col.row(c * 9 + ky * 3 + kx).data();
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const double* srow = src + y * w;
          double* drow = dst + sy * w;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx >= 0 && sx < w) drow[sx] += srow[x];
          }
        }
      }
    }
  }
}

RowMat conv_forward(const SegModel& m, int index, const RowMat& in, int h, int w, RowMat& col) {
  const ParamTensor& wt = m.params[2 * index];
  const ParamTensor& bias = m.params[2 * index + 1];
  const int out_ch = wt.shape[0];
  const int k = wt.shape[2];
  if (k == 3) {
    im2col3(in, h, w, col);
  } else {
    col = in;
  }
  ConstMap wm(wt.values.data(), out_ch, col.rows());
  RowMat out(out_ch, col.cols());
  out.noalias() = wm * col;
  out.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.values.data(), out_ch);
  return out;
}

// Returns the input gradient unless `need_input` is false.
RowMat conv_backward(const SegModel& m, int index, const RowMat& dout, const RowMat& col, int h, int w,
                     std::vector<std::vector<double>>& grads, bool need_input) {
  const ParamTensor& wt = m.params[2 * index];
  const int out_ch = wt.shape[0];
  const int k = wt.shape[2];
  Map dw(grads[2 * index].data(), out_ch, col.rows());
  dw.noalias() += dout * col.transpose();
  Eigen::Map<Eigen::VectorXd>(grads[2 * index + 1].data(), out_ch) += dout.rowwise().sum();
  if (!need_input) return {};
  ConstMap wm(wt.values.data(), out_ch, col.rows());
  RowMat dcol(col.rows(), col.cols());
  dcol.noalias() = wm.transpose() * dout;
  if (k != 3) return dcol;
  RowMat din;
  col2im3(dcol, h, w, din);
  return din;
}

void relu_inplace(RowMat& x) { x = x.cwiseMax(0.0); }

void relu_backward(RowMat& grad, const RowMat& out) {
  grad = (out.array() > 0.0).select(grad, 0.0);
}

RowMat maxpool2(const RowMat& in, int h, int w, std::vector<int>& argmax) {
  const int oh = h / 2, ow = w / 2;
  RowMat out(in.rows(), oh * ow);
  argmax.assign(static_cast<std::size_t>(in.rows()) * oh * ow, 0);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    const double* src = in.row(c).data();
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int best = (2 * y) * w + 2 * x;
        const int cands[3] = {best + 1, best + w, best + w + 1};
        for (int q : cands) {
          if (src[q] > src[best]) best = q;
        }
        out(c, y * ow + x) = src[best];
        argmax[c * oh * ow + y * ow + x] = best;
      }
    }
  }
  return out;
}

RowMat maxpool2_backward(const RowMat& dout, const std::vector<int>& argmax, int h, int w) {
  RowMat din = RowMat::Zero(dout.rows(), h * w);
  const Eigen::Index n = dout.cols();
  for (Eigen::Index c = 0; c < dout.rows(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) din(c, argmax[c * n + i]) += dout(c, i);
  }
  return din;
}

// Nearest-neighbour 2x upsampling from (h, w) to (2h, 2w).
RowMat upsample2(const RowMat& in, int h, int w) {
  const int ow = 2 * w;
  RowMat out(in.rows(), 4 * h * w);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int x = 0; x < ow; ++x) out(c, y * ow + x) = in(c, (y / 2) * w + x / 2);
    }
  }
  return out;
}

RowMat upsample2_backward(const RowMat& dout, int h, int w) {
  const int ow = 2 * w;
  RowMat din = RowMat::Zero(dout.rows(), h * w);
  for (Eigen::Index c = 0; c < dout.rows(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int x = 0; x < ow; ++x) din(c, (y / 2) * w + x / 2) += dout(c, y * ow + x);
    }
  }
  return din;
}

RowMat concat_rows(const RowMat& a, const RowMat& b) {
  RowMat out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

void apply_dropout(RowMat& x, double rate, const DropoutSpec& spec, int layer,
                   std::vector<double>* mask_out) {
  if (!spec.enabled || rate <= 0.0) {
    if (mask_out) mask_out->clear();
    return;
  }
  Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(layer)}));
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(static_cast<std::size_t>(x.size()));
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  x.array() *= Eigen::Map<const RowMat>(mask.data(), x.rows(), x.cols()).array();
  if (mask_out) *mask_out = std::move(mask);
}

}  // namespace

PaddedImage pad_to_multiple_of_4(const GrayImage& image) {
  const int w = image.width, h = image.height;
  const int pw = (w + 3) / 4 * 4, ph = (h + 3) / 4 * 4;
  if (pw == w && ph == h) return {image, w, h};
  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  GrayImage out(pw, ph);
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) out.at(x, y) = image.at(reflect(x, w), reflect(y, h));
  }
  return {std::move(out), w, h};
}

std::vector<std::vector<double>> zero_gradients(const SegModel& model) {
  std::vector<std::vector<double>> g;
  g.reserve(model.params.size());
  for (const auto& p : model.params) g.emplace_back(p.values.size(), 0.0);
  return g;
}

RowMat forward(const SegModel& m, const GrayImage& image, const DropoutSpec& dropout, ForwardCache* cache) {
  if (image.width % 4 != 0 || image.height % 4 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "network input sides must be multiples of 4");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  const int h0 = image.height, w0 = image.width;
  const int h1 = h0 / 2, w1 = w0 / 2, h2 = h1 / 2, w2 = w1 / 2;
  c.height = h0;
  c.width = w0;
  // Resized rather than reassigned so buffers are reused across calls.
  c.cols.resize(kConvCount);
  c.outs.resize(kConvCount - 1);
  c.pool_argmax.resize(2);
  c.dropout_masks.resize(kDropoutLayers);

  // Per-image standardization.
  // Summation order independent of buffer alignment.
  const std::size_t n = image.data.size();
  double mean = 0.0;
  for (double v : image.data) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : image.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = var > 1e-12 ? 1.0 / std::sqrt(var) : 0.0;
  RowMat x0(1, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x0(0, static_cast<Eigen::Index>(i)) = (image.data[i] - mean) * inv_std;

  auto conv_relu = [&](int i, const RowMat& in, int h, int w) {
    RowMat out = conv_forward(m, i, in, h, w, c.cols[i]);
    relu_inplace(out);
    c.outs[i] = out;
    return out;
  };

  RowMat e0 = conv_relu(1, conv_relu(0, x0, h0, w0), h0, w0);
  RowMat p0 = maxpool2(e0, h0, w0, c.pool_argmax[0]);
  RowMat e1 = conv_relu(3, conv_relu(2, p0, h1, w1), h1, w1);
  RowMat p1 = maxpool2(e1, h1, w1, c.pool_argmax[1]);
  RowMat mid = conv_relu(5, conv_relu(4, p1, h2, w2), h2, w2);

  RowMat d1 = conv_relu(7, conv_relu(6, concat_rows(upsample2(mid, h2, w2), e1), h1, w1), h1, w1);
  apply_dropout(d1, m.arch.dropout_rate, dropout, 0, &c.dropout_masks[0]);
  RowMat d0 = conv_relu(9, conv_relu(8, concat_rows(upsample2(d1, h1, w1), e0), h0, w0), h0, w0);
  apply_dropout(d0, m.arch.dropout_rate, dropout, 1, &c.dropout_masks[1]);

  RowMat logits = conv_forward(m, 10, d0, h0, w0, c.cols[10]);
  RowMat probs(2, logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double diff = logits(1, j) - logits(0, j);
    // Numerically stable two-class softmax.
    const double fg = diff >= 0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));
    probs(1, j) = fg;
    probs(0, j) = 1.0 - fg;
  }
  return probs;
}

void backward(const SegModel& m, const ForwardCache& c, const RowMat& dlogits,
              std::vector<std::vector<double>>& grads) {
  const int h0 = c.height, w0 = c.width;
  const int h1 = h0 / 2, w1 = w0 / 2, h2 = h1 / 2, w2 = w1 / 2;
  const int c0 = m.arch.widths[0], c1 = m.arch.widths[1];

  auto conv_relu_back = [&](int i, RowMat grad, int h, int w) {
    relu_backward(grad, c.outs[i]);
    return conv_backward(m, i, grad, c.cols[i], h, w, grads, i != 0);
  };
  auto undo_dropout = [&](RowMat& g, int layer) {
    const auto& mask = c.dropout_masks[layer];
    if (!mask.empty()) g.array() *= Eigen::Map<const RowMat>(mask.data(), g.rows(), g.cols()).array();
  };

  RowMat g_d0 = conv_backward(m, 10, dlogits, c.cols[10], h0, w0, grads, true);
  undo_dropout(g_d0, 1);
  RowMat g_cat0 = conv_relu_back(8, conv_relu_back(9, g_d0, h0, w0), h0, w0);
  RowMat g_d1 = upsample2_backward(g_cat0.topRows(c1), h1, w1);
  RowMat g_e0 = g_cat0.bottomRows(c0);

  undo_dropout(g_d1, 0);
  RowMat g_cat1 = conv_relu_back(6, conv_relu_back(7, g_d1, h1, w1), h1, w1);
  RowMat g_mid = upsample2_backward(g_cat1.topRows(g_cat1.rows() - c1), h2, w2);
  RowMat g_e1 = g_cat1.bottomRows(c1);

  RowMat g_p1 = conv_relu_back(4, conv_relu_back(5, g_mid, h2, w2), h2, w2);
  g_e1 += maxpool2_backward(g_p1, c.pool_argmax[1], h1, w1);
  RowMat g_p0 = conv_relu_back(2, conv_relu_back(3, g_e1, h1, w1), h1, w1);
  g_e0 += maxpool2_backward(g_p0, c.pool_argmax[0], h0, w0);
  conv_relu_back(0, conv_relu_back(1, g_e0, h0, w0), h0, w0);
}

}  // namespace arspl::segmodel::detail
