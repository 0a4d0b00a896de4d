#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "frettrace/tensor.hpp"

namespace frettrace {

/// A named parameter block with its gradient accumulator; every trainable
/// layer exposes its blocks through this view so the optimizer and the
/// checkpoint writer can walk one flat list.
struct ParamView {
    std::string name;
    std::span<float> value;
    std::span<float> grad;
};

/// 3x3 (or general) convolution over [C, F, T] maps with independent
/// frequency/time zero padding. Backward accumulates into the weight
/// gradients and returns the input gradient.
class Conv2d {
public:
    Conv2d(std::string name, int in_c, int out_c, int kh, int kw, int pad_h, int pad_w);

    void init(std::mt19937_64& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    std::vector<ParamView> params();

    int out_h(int in_h) const { return in_h + 2 * pad_h_ - kh_ + 1; }
    int out_w(int in_w) const { return in_w + 2 * pad_w_ - kw_ + 1; }

private:
    void im2col(const Tensor& x, int item, float* col) const;
    void col2im_add(const float* col, Tensor& dx, int item) const;

    std::string name_;
    int in_c_, out_c_, kh_, kw_, pad_h_, pad_w_;
    std::vector<float> w_, b_, dw_, db_;
    Tensor x_cache_;
};

/// Per-channel batch normalization over (N, H, W); batch statistics during
/// training, running averages in evaluation mode.
class BatchNorm2d {
public:
    BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& dy);
    std::vector<ParamView> params();

    std::span<float> running_mean() { return running_mean_; }
    std::span<float> running_var() { return running_var_; }

private:
    std::string name_;
    int channels_;
    double momentum_, eps_;
    std::vector<float> gamma_, beta_, dgamma_, dbeta_;
    std::vector<float> running_mean_, running_var_;
    std::vector<float> inv_std_;
    Tensor xhat_cache_;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;

private:
    Tensor y_cache_;
};

/// Max pooling with kernel and stride 2 along the frequency axis only.
class MaxPoolFreq {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy) const;

private:
    std::vector<int> argmax_;
    int in_h_ = 0, in_c_ = 0, in_w_ = 0, in_n_ = 0;
};

/// Inverted dropout; identity in evaluation mode.
class Dropout {
public:
    explicit Dropout(double rate) : rate_(rate) {}

    Tensor forward(const Tensor& x, bool training, std::mt19937_64& rng);
    Tensor backward(const Tensor& dy) const;

private:
    double rate_;
    std::vector<float> mask_;
    bool identity_ = true;
};

/// Fully connected layer on [N, features] tensors (stored as n=N, c=F).
class Linear {
public:
    Linear(std::string name, int in_features, int out_features);

    void init(std::mt19937_64& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    std::vector<ParamView> params();

    int in_features() const { return in_f_; }
    int out_features() const { return out_f_; }

private:
    std::string name_;
    int in_f_, out_f_;
    std::vector<float> w_, b_, dw_, db_;
    Tensor x_cache_;
};

}  // namespace frettrace
