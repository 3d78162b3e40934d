#ifndef DCNET_ADAM_HPP
#define DCNET_ADAM_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "dcnet/tensor.hpp"

namespace dcnet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    AdamConfig config;
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    long long t = 0;

    AdamState() = default;
    AdamState(const ParameterStore<T>& store, AdamConfig cfg) : config(cfg) {
        for (const auto& p : store) {
            m.emplace_back(p.tensor.size(), T{0});
            v.emplace_back(p.tensor.size(), T{0});
        }
    }
};

using LearningRates = std::map<ParamGroup, double>;

// Global L2 norm of all gradients.
template <class T>
double grad_norm(const ParameterStore<T>& store) {
    double s = 0;
    for (const auto& p : store)
        for (T g : p.tensor.grad()) s += static_cast<double>(g) * static_cast<double>(g);
    return std::sqrt(s);
}

// Rescales gradients so their global norm is at most max_norm. No-op when
// max_norm <= 0.
template <class T>
void clip_grad_norm(ParameterStore<T>& store, double max_norm) {
    if (max_norm <= 0) return;
    double n = grad_norm(store);
    if (n <= max_norm || n == 0) return;
    T scale = static_cast<T>(max_norm / n);
    for (auto& p : store)
        for (T& g : p.tensor.grad()) g *= scale;
}

// Bias-corrected Adam update, one learning rate per parameter group.
// Gradients are cleared afterwards; frozen rows are neither updated nor
// accumulate moments.
template <class T>
void adam_step(ParameterStore<T>& store, AdamState<T>& state, const LearningRates& lr_by_group) {
    if (state.m.size() != store.size()) throw std::invalid_argument("adam_step: state does not match store");
    ++state.t;
    const auto& cfg = state.config;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);

    for (std::size_t pi = 0; pi < store.size(); ++pi) {
        auto& p = store[pi];
        if (!p.tensor.has_grad()) throw std::invalid_argument("adam_step: missing gradient for " + p.name);
        auto lr_it = lr_by_group.find(p.group);
        if (lr_it == lr_by_group.end())
            throw std::invalid_argument("adam_step: no learning rate for group of " + p.name);
        const T step = static_cast<T>(lr_it->second / bc1);
        const T inv_bc2 = static_cast<T>(1.0 / bc2);
        const T eps = static_cast<T>(cfg.eps);

        auto vals = p.tensor.values();
        auto grad = p.tensor.grad();
        for (std::size_t r : p.frozen_rows)
            for (std::size_t c = 0; c < p.tensor.cols(); ++c) grad[r * p.tensor.cols() + c] = T{0};

        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t k = 0; k < vals.size(); ++k) {
            const T g = grad[k];
            m[k] = b1 * m[k] + (T{1} - b1) * g;
            v[k] = b2 * v[k] + (T{1} - b2) * g * g;
            vals[k] -= step * m[k] / (std::sqrt(v[k] * inv_bc2) + eps);
        }
        p.tensor.zero_grad();
    }
}

}  // namespace dcnet

#endif  // DCNET_ADAM_HPP
