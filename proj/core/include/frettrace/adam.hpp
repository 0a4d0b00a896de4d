#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "frettrace/layers.hpp"

namespace frettrace {

/// Adam with the defaults of its original publication
/// (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) and bias correction.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;

    /// Allocates moment buffers matching the parameter list.
    void reset(const std::vector<ParamView>& params);

    /// One update step at the given learning rate; gradients are left
    /// untouched (call zero_grad separately).
    void step(const std::vector<ParamView>& params, double lr);

    bool initialized() const { return !m.empty(); }
};

}  // namespace frettrace
