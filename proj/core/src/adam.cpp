#include "frettrace/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace frettrace {

void AdamState::reset(const std::vector<ParamView>& params) {
    t = 0;
    m.assign(params.size(), {});
    v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i].assign(params[i].value.size(), 0.f);
        v[i].assign(params[i].value.size(), 0.f);
    }
}

void AdamState::step(const std::vector<ParamView>& params, double lr) {
    if (m.size() != params.size()) {
        throw std::invalid_argument("AdamState: moment buffers do not match parameter list");
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& pm = m[i];
        auto& pv = v[i];
        const auto value = params[i].value;
        const auto grad = params[i].grad;
        if (pm.size() != value.size()) {
            throw std::invalid_argument("AdamState: buffer size mismatch for " + params[i].name);
        }
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j];
            pm[j] = static_cast<float>(beta1 * pm[j] + (1.0 - beta1) * g);
            pv[j] = static_cast<float>(beta2 * pv[j] + (1.0 - beta2) * g * g);
            const double mhat = pm[j] / bc1;
            const double vhat = pv[j] / bc2;
            value[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

}  // namespace frettrace
