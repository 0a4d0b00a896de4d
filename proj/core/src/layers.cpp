#include "frettrace/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace frettrace {

using RowMajorMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMajorMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMajorMatrix>;

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_c, int out_c, int kh, int kw, int pad_h, int pad_w)
    : name_(std::move(name)), in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), pad_h_(pad_h),
      pad_w_(pad_w) {
    const std::size_t k = static_cast<std::size_t>(in_c) * kh * kw;
    w_.assign(static_cast<std::size_t>(out_c) * k, 0.f);
    b_.assign(static_cast<std::size_t>(out_c), 0.f);
    dw_.assign(w_.size(), 0.f);
    db_.assign(b_.size(), 0.f);
}

void Conv2d::init(std::mt19937_64& rng) {
    // He initialization for ReLU stacks
    const double fan_in = static_cast<double>(in_c_) * kh_ * kw_;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& w : w_) w = static_cast<float>(dist(rng));
    for (auto& b : b_) b = 0.f;
}

void Conv2d::im2col(const Tensor& x, int item, float* col) const {
    const int oh = out_h(x.h);
    const int ow = out_w(x.w);
    const std::size_t l = static_cast<std::size_t>(oh) * ow;
    const float* src = x.item(item);
    std::size_t row = 0;
    for (int c = 0; c < in_c_; ++c) {
        for (int ky = 0; ky < kh_; ++ky) {
            for (int kx = 0; kx < kw_; ++kx, ++row) {
                float* dst = col + row * l;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy - pad_h_ + ky;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox - pad_w_ + kx;
                        const bool inside = iy >= 0 && iy < x.h && ix >= 0 && ix < x.w;
                        dst[static_cast<std::size_t>(oy) * ow + ox] =
                            inside ? src[(static_cast<std::size_t>(c) * x.h + iy) * x.w + ix]
                                   : 0.f;
                    }
                }
            }
        }
    }
}

void Conv2d::col2im_add(const float* col, Tensor& dx, int item) const {
    const int oh = out_h(dx.h);
    const int ow = out_w(dx.w);
    const std::size_t l = static_cast<std::size_t>(oh) * ow;
    float* dst = dx.item(item);
    std::size_t row = 0;
    for (int c = 0; c < in_c_; ++c) {
        for (int ky = 0; ky < kh_; ++ky) {
            for (int kx = 0; kx < kw_; ++kx, ++row) {
                const float* src = col + row * l;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy - pad_h_ + ky;
                    if (iy < 0 || iy >= dx.h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox - pad_w_ + kx;
                        if (ix < 0 || ix >= dx.w) continue;
                        dst[(static_cast<std::size_t>(c) * dx.h + iy) * dx.w + ix] +=
                            src[static_cast<std::size_t>(oy) * ow + ox];
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.c != in_c_) {
        throw std::invalid_argument(name_ + ": input has " + std::to_string(x.c) +
                                    " channels, expected " + std::to_string(in_c_));
    }
    x_cache_ = x;
    const int oh = out_h(x.h);
    const int ow = out_w(x.w);
    if (oh <= 0 || ow <= 0) {
        throw std::invalid_argument(name_ + ": input too small for kernel");
    }
    Tensor y(x.n, out_c_, oh, ow);

    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    const std::size_t l = static_cast<std::size_t>(oh) * ow;
    std::vector<float> col(k * l);
    ConstMapMatrix w(w_.data(), out_c_, static_cast<Eigen::Index>(k));
    for (int i = 0; i < x.n; ++i) {
        im2col(x, i, col.data());
        ConstMapMatrix cm(col.data(), static_cast<Eigen::Index>(k),
                          static_cast<Eigen::Index>(l));
        MapMatrix ym(y.item(i), out_c_, static_cast<Eigen::Index>(l));
        ym.noalias() = w * cm;
        for (int oc = 0; oc < out_c_; ++oc) ym.row(oc).array() += b_[oc];
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    const int oh = dy.h;
    const int ow = dy.w;
    const std::size_t k = static_cast<std::size_t>(in_c_) * kh_ * kw_;
    const std::size_t l = static_cast<std::size_t>(oh) * ow;

    Tensor dx(x.n, x.c, x.h, x.w);
    std::vector<float> col(k * l);
    std::vector<float> dcol(k * l);

    MapMatrix dw(dw_.data(), out_c_, static_cast<Eigen::Index>(k));
    ConstMapMatrix w(w_.data(), out_c_, static_cast<Eigen::Index>(k));
    for (int i = 0; i < x.n; ++i) {
        ConstMapMatrix dym(dy.item(i), out_c_, static_cast<Eigen::Index>(l));
        im2col(x, i, col.data());
        ConstMapMatrix cm(col.data(), static_cast<Eigen::Index>(k),
                          static_cast<Eigen::Index>(l));
        dw.noalias() += dym * cm.transpose();
        for (int oc = 0; oc < out_c_; ++oc) db_[oc] += dym.row(oc).sum();

        MapMatrix dcm(dcol.data(), static_cast<Eigen::Index>(k),
                      static_cast<Eigen::Index>(l));
        dcm.noalias() = w.transpose() * dym;
        col2im_add(dcol.data(), dx, i);
    }
    return dx;
}

std::vector<ParamView> Conv2d::params() {
    return {{name_ + ".weight", w_, dw_}, {name_ + ".bias", b_, db_}};
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : name_(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {
    gamma_.assign(channels, 1.f);
    beta_.assign(channels, 0.f);
    dgamma_.assign(channels, 0.f);
    dbeta_.assign(channels, 0.f);
    running_mean_.assign(channels, 0.f);
    running_var_.assign(channels, 1.f);
    inv_std_.assign(channels, 1.f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    if (x.c != channels_) throw std::invalid_argument(name_ + ": channel mismatch");
    Tensor y(x.n, x.c, x.h, x.w);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    const std::size_t m = static_cast<std::size_t>(x.n) * plane;

    if (training) {
        xhat_cache_ = Tensor(x.n, x.c, x.h, x.w);
        for (int c = 0; c < channels_; ++c) {
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < x.n; ++i) {
                const float* p = x.item(i) + static_cast<std::size_t>(c) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    sum += p[j];
                    sq += static_cast<double>(p[j]) * p[j];
                }
            }
            const double mean = sum / static_cast<double>(m);
            const double var = std::max(sq / static_cast<double>(m) - mean * mean, 0.0);
            const float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
            inv_std_[c] = istd;
            running_mean_[c] = static_cast<float>((1.0 - momentum_) * running_mean_[c] +
                                                  momentum_ * mean);
            running_var_[c] =
                static_cast<float>((1.0 - momentum_) * running_var_[c] + momentum_ * var);
            for (int i = 0; i < x.n; ++i) {
                const float* p = x.item(i) + static_cast<std::size_t>(c) * plane;
                float* xh = xhat_cache_.item(i) + static_cast<std::size_t>(c) * plane;
                float* yp = y.item(i) + static_cast<std::size_t>(c) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    xh[j] = (p[j] - static_cast<float>(mean)) * istd;
                    yp[j] = gamma_[c] * xh[j] + beta_[c];
                }
            }
        }
    } else {
        for (int c = 0; c < channels_; ++c) {
            const float istd =
                static_cast<float>(1.0 / std::sqrt(running_var_[c] + eps_));
            const float mean = running_mean_[c];
            for (int i = 0; i < x.n; ++i) {
                const float* p = x.item(i) + static_cast<std::size_t>(c) * plane;
                float* yp = y.item(i) + static_cast<std::size_t>(c) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    yp[j] = gamma_[c] * (p[j] - mean) * istd + beta_[c];
                }
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const Tensor& xh = xhat_cache_;
    Tensor dx(dy.n, dy.c, dy.h, dy.w);
    const std::size_t plane = static_cast<std::size_t>(dy.h) * dy.w;
    const double m = static_cast<double>(dy.n) * plane;

    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (int i = 0; i < dy.n; ++i) {
            const float* dp = dy.item(i) + static_cast<std::size_t>(c) * plane;
            const float* xp = xh.item(i) + static_cast<std::size_t>(c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                sum_dy += dp[j];
                sum_dy_xh += static_cast<double>(dp[j]) * xp[j];
            }
        }
        dbeta_[c] += static_cast<float>(sum_dy);
        dgamma_[c] += static_cast<float>(sum_dy_xh);
        const float k1 = static_cast<float>(sum_dy / m);
        const float k2 = static_cast<float>(sum_dy_xh / m);
        const float g = gamma_[c] * inv_std_[c];
        for (int i = 0; i < dy.n; ++i) {
            const float* dp = dy.item(i) + static_cast<std::size_t>(c) * plane;
            const float* xp = xh.item(i) + static_cast<std::size_t>(c) * plane;
            float* dxp = dx.item(i) + static_cast<std::size_t>(c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
                dxp[j] = g * (dp[j] - k1 - xp[j] * k2);
            }
        }
    }
    return dx;
}

std::vector<ParamView> BatchNorm2d::params() {
    return {{name_ + ".gamma", gamma_, dgamma_}, {name_ + ".beta", beta_, dbeta_}};
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.v) v = v > 0.f ? v : 0.f;
    y_cache_ = y;
    return y;
}

Tensor ReLU::backward(const Tensor& dy) const {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) {
        if (y_cache_.v[i] <= 0.f) dx.v[i] = 0.f;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// MaxPoolFreq

Tensor MaxPoolFreq::forward(const Tensor& x) {
    const int oh = x.h / 2;
    in_n_ = x.n;
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor y(x.n, x.c, oh, x.w);
    argmax_.assign(y.size(), 0);
    std::size_t out_idx = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < x.w; ++ox, ++out_idx) {
                    const float a = x.at(i, c, 2 * oy, ox);
                    const float b = x.at(i, c, 2 * oy + 1, ox);
                    const int pick = b > a ? 2 * oy + 1 : 2 * oy;
                    y.v[out_idx] = b > a ? b : a;
                    argmax_[out_idx] = pick;
                }
            }
        }
    }
    return y;
}

Tensor MaxPoolFreq::backward(const Tensor& dy) const {
    Tensor dx(in_n_, in_c_, in_h_, in_w_);
    std::size_t out_idx = 0;
    for (int i = 0; i < dy.n; ++i) {
        for (int c = 0; c < dy.c; ++c) {
            for (int oy = 0; oy < dy.h; ++oy) {
                for (int ox = 0; ox < dy.w; ++ox, ++out_idx) {
                    dx.at(i, c, argmax_[out_idx], ox) += dy.v[out_idx];
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, bool training, std::mt19937_64& rng) {
    if (!training || rate_ <= 0.0) {
        identity_ = true;
        return x;
    }
    identity_ = false;
    const float keep = static_cast<float>(1.0 - rate_);
    const float scale = 1.f / keep;
    std::uniform_real_distribution<float> uni(0.f, 1.f);
    mask_.resize(x.size());
    Tensor y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = uni(rng) < keep ? scale : 0.f;
        y.v[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) const {
    if (identity_) return dy;
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_features, int out_features)
    : name_(std::move(name)), in_f_(in_features), out_f_(out_features) {
    w_.assign(static_cast<std::size_t>(out_f_) * in_f_, 0.f);
    b_.assign(static_cast<std::size_t>(out_f_), 0.f);
    dw_.assign(w_.size(), 0.f);
    db_.assign(b_.size(), 0.f);
}

void Linear::init(std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_f_));
    for (auto& w : w_) w = static_cast<float>(dist(rng));
    for (auto& b : b_) b = 0.f;
}

Tensor Linear::forward(const Tensor& x) {
    if (static_cast<int>(x.item_size()) != in_f_) {
        throw std::invalid_argument(name_ + ": feature size mismatch");
    }
    x_cache_ = x;
    Tensor y(x.n, out_f_, 1, 1);
    ConstMapMatrix xm(x.v.data(), x.n, in_f_);
    ConstMapMatrix wm(w_.data(), out_f_, in_f_);
    MapMatrix ym(y.v.data(), x.n, out_f_);
    ym.noalias() = xm * wm.transpose();
    for (int j = 0; j < out_f_; ++j) ym.col(j).array() += b_[j];
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    Tensor dx(x.n, x.c, x.h, x.w);
    ConstMapMatrix dym(dy.v.data(), dy.n, out_f_);
    ConstMapMatrix xm(x.v.data(), x.n, in_f_);
    MapMatrix dwm(dw_.data(), out_f_, in_f_);
    dwm.noalias() += dym.transpose() * xm;
    for (int j = 0; j < out_f_; ++j) db_[j] += dym.col(j).sum();
    ConstMapMatrix wm(w_.data(), out_f_, in_f_);
    MapMatrix dxm(dx.v.data(), x.n, in_f_);
    dxm.noalias() = dym * wm;
    return dx;
}

std::vector<ParamView> Linear::params() {
    return {{name_ + ".weight", w_, dw_}, {name_ + ".bias", b_, db_}};
}

}  // namespace frettrace
