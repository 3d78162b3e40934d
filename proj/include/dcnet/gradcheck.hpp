#ifndef DCNET_GRADCHECK_HPP
#define DCNET_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dcnet/error.hpp"
#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"

namespace dcnet {

struct GradCheckResult {
    double max_rel_error = 0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0;
    double worst_numeric = 0;
    std::size_t coords_checked = 0;
};

// Compares analytic gradients against central differences.
//
// `loss` evaluates the objective at the store's current values. When its
// argument is true it must also accumulate analytic gradients into the
// store (which is zeroed beforehand). It must be deterministic.
//
// For each parameter, `samples` coordinates are drawn (all of them when the
// parameter is smaller). Relative error is
//   |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
inline GradCheckResult grad_check(ParameterStore<double>& store,
                                  const std::function<double(bool)>& loss, double eps,
                                  std::size_t samples, std::uint64_t seed) {
    auto finite_or_throw = [](double v, const std::string& where) {
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite value in " + where);
    };

    store.zero_grad();
    finite_or_throw(loss(true), "loss");
    std::vector<std::vector<double>> analytic;
    for (const auto& p : store) analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    store.zero_grad();

    Rng rng(seed);
    GradCheckResult res;
    for (std::size_t pi = 0; pi < store.size(); ++pi) {
        auto& p = store[pi];
        auto vals = p.tensor.values();
        std::vector<std::size_t> coords(vals.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (coords.size() > samples) {
            rng.shuffle(std::span<std::size_t>(coords));
            coords.resize(samples);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t k : coords) {
            const double orig = vals[k];
            vals[k] = orig + eps;
            const double up = loss(false);
            vals[k] = orig - eps;
            const double down = loss(false);
            vals[k] = orig;
            finite_or_throw(up, p.name);
            finite_or_throw(down, p.name);
            const double numeric = (up - down) / (2 * eps);
            const double ga = analytic[pi][k];
            finite_or_throw(ga, p.name + " (analytic)");
            const double rel = std::abs(ga - numeric) / std::max(1e-8, std::abs(ga) + std::abs(numeric));
            ++res.coords_checked;
            if (rel >= res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = p.name;
                res.worst_index = k;
                res.worst_analytic = ga;
                res.worst_numeric = numeric;
            }
        }
    }
    store.zero_grad();
    return res;
}

}  // namespace dcnet

#endif  // DCNET_GRADCHECK_HPP
