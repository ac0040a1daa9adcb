#include <limits>

#include "layers.hpp"

namespace mpj::neural {

namespace {

// Flat offset of (d, y, x, c) in a channels-last sample of shape s.
inline std::size_t offset(const Shape& s, std::size_t d, std::size_t y, std::size_t x, std::size_t c) {
  return ((d * s[1] + y) * s[2] + x) * s[3] + c;
}

}  // namespace

Conv3DLayer::Conv3DLayer(std::size_t first_tensor, const Shape& in, const Shape& out,
                         std::array<std::size_t, 3> kernel, Activation act)
    : kernel_(first_tensor), bias_(first_tensor + 1), in_(in), out_(out), window_(kernel), act_(act) {}

Eigen::MatrixXd Conv3DLayer::forward(const ModelParams& p, const Eigen::MatrixXd& x, Phase) {
  const std::size_t cin = in_[3], cout = out_[3];
  const double* k = p.tensors[kernel_].values.data();
  const double* bias = p.tensors[bias_].values.data();
  x_ = x;
  y_.resize(static_cast<Eigen::Index>(element_count(out_)), x.cols());

  for (Eigen::Index b = 0; b < x.cols(); ++b) {
    const double* xs = x.col(b).data();
    double* ys = y_.col(b).data();
    for (std::size_t od = 0; od < out_[0]; ++od) {
      for (std::size_t oy = 0; oy < out_[1]; ++oy) {
        for (std::size_t ox = 0; ox < out_[2]; ++ox) {
          double* acc = ys + offset(out_, od, oy, ox, 0);
          for (std::size_t f = 0; f < cout; ++f) acc[f] = bias[f];
          for (std::size_t kd = 0; kd < window_[0]; ++kd) {
            for (std::size_t ky = 0; ky < window_[1]; ++ky) {
              for (std::size_t kx = 0; kx < window_[2]; ++kx) {
                const double* xin = xs + offset(in_, od + kd, oy + ky, ox + kx, 0);
                const double* kw = k + ((kd * window_[1] + ky) * window_[2] + kx) * cin * cout;
                for (std::size_t c = 0; c < cin; ++c) {
                  const double xv = xin[c];
                  const double* kc = kw + c * cout;
                  for (std::size_t f = 0; f < cout; ++f) acc[f] += xv * kc[f];
                }
              }
            }
          }
        }
      }
    }
  }
  apply_activation(act_, y_);
  return y_;
}

Eigen::MatrixXd Conv3DLayer::backward(const ModelParams& p, const Eigen::MatrixXd& dy, Gradients& g) {
  const std::size_t cin = in_[3], cout = out_[3];
  const double* k = p.tensors[kernel_].values.data();
  double* dk = g.tensors[kernel_].data();
  double* dbias = g.tensors[bias_].data();

  Eigen::MatrixXd dz = dy;
  activation_backward(act_, y_, dz);
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(x_.rows(), x_.cols());

  for (Eigen::Index b = 0; b < dz.cols(); ++b) {
    const double* xs = x_.col(b).data();
    const double* dzs = dz.col(b).data();
    double* dxs = dx.col(b).data();
    for (std::size_t od = 0; od < out_[0]; ++od) {
      for (std::size_t oy = 0; oy < out_[1]; ++oy) {
        for (std::size_t ox = 0; ox < out_[2]; ++ox) {
          const double* go = dzs + offset(out_, od, oy, ox, 0);
          for (std::size_t f = 0; f < cout; ++f) dbias[f] += go[f];
          for (std::size_t kd = 0; kd < window_[0]; ++kd) {
            for (std::size_t ky = 0; ky < window_[1]; ++ky) {
              for (std::size_t kx = 0; kx < window_[2]; ++kx) {
                const std::size_t in_off = offset(in_, od + kd, oy + ky, ox + kx, 0);
                const std::size_t k_off = ((kd * window_[1] + ky) * window_[2] + kx) * cin * cout;
                for (std::size_t c = 0; c < cin; ++c) {
                  const double xv = xs[in_off + c];
                  const double* kc = k + k_off + c * cout;
                  double* dkc = dk + k_off + c * cout;
                  double acc = 0.0;
                  for (std::size_t f = 0; f < cout; ++f) {
                    dkc[f] += xv * go[f];
                    acc += kc[f] * go[f];
                  }
                  dxs[in_off + c] += acc;
                }
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

MaxPool3DLayer::MaxPool3DLayer(const Shape& in, const Shape& out, std::array<std::size_t, 3> window)
    : in_(in), out_(out), window_(window) {}

Eigen::MatrixXd MaxPool3DLayer::forward(const ModelParams&, const Eigen::MatrixXd& x, Phase) {
  const std::size_t channels = in_[3];
  const auto out_size = static_cast<Eigen::Index>(element_count(out_));
  batch_ = x.cols();
  argmax_.assign(static_cast<std::size_t>(out_size * batch_), 0);
  Eigen::MatrixXd y(out_size, batch_);

  for (Eigen::Index b = 0; b < batch_; ++b) {
    const double* xs = x.col(b).data();
    for (std::size_t od = 0; od < out_[0]; ++od) {
      for (std::size_t oy = 0; oy < out_[1]; ++oy) {
        for (std::size_t ox = 0; ox < out_[2]; ++ox) {
          for (std::size_t c = 0; c < channels; ++c) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_at = 0;
            for (std::size_t kd = 0; kd < window_[0]; ++kd) {
              for (std::size_t ky = 0; ky < window_[1]; ++ky) {
                for (std::size_t kx = 0; kx < window_[2]; ++kx) {
                  const std::size_t at =
                      offset(in_, od * window_[0] + kd, oy * window_[1] + ky, ox * window_[2] + kx, c);
                  if (xs[at] > best) {
                    best = xs[at];
                    best_at = at;
                  }
                }
              }
            }
            const std::size_t o = offset(out_, od, oy, ox, c);
            y(static_cast<Eigen::Index>(o), b) = best;
            argmax_[static_cast<std::size_t>(b * out_size) + o] = static_cast<Eigen::Index>(best_at);
          }
        }
      }
    }
  }
  return y;
}

Eigen::MatrixXd MaxPool3DLayer::backward(const ModelParams&, const Eigen::MatrixXd& dy, Gradients&) {
  const auto in_size = static_cast<Eigen::Index>(element_count(in_));
  const Eigen::Index out_size = dy.rows();
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(in_size, dy.cols());
  for (Eigen::Index b = 0; b < dy.cols(); ++b) {
    for (Eigen::Index o = 0; o < out_size; ++o) {
      dx(argmax_[static_cast<std::size_t>(b * out_size + o)], b) += dy(o, b);
    }
  }
  return dx;
}

}  // namespace mpj::neural
