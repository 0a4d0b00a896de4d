#pragma once

#include <cstddef>
#include <vector>

namespace frettrace {

/// Dense NCHW float tensor. H is the frequency axis, W the time axis.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.f) {}

    std::size_t size() const { return v.size(); }
    std::size_t item_size() const { return static_cast<std::size_t>(c) * h * w; }

    float* item(int i) { return v.data() + static_cast<std::size_t>(i) * item_size(); }
    const float* item(int i) const {
        return v.data() + static_cast<std::size_t>(i) * item_size();
    }

    float at(int i, int ch, int y, int x) const {
        return v[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
    }
    float& at(int i, int ch, int y, int x) {
        return v[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
    }
};

}  // namespace frettrace
