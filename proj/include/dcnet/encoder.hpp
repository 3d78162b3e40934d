#ifndef DCNET_ENCODER_HPP
#define DCNET_ENCODER_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcnet/ops.hpp"
#include "dcnet/random.hpp"
#include "dcnet/tensor.hpp"

namespace dcnet {

enum class Pooling { FinalState, Mean };

inline std::string_view to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "final-state"; }

inline Pooling parse_pooling(std::string_view s) {
    if (s == "final-state" || s == "final") return Pooling::FinalState;
    if (s == "mean") return Pooling::Mean;
    throw std::invalid_argument("unknown pooling '" + std::string(s) + "'");
}

struct EncoderConfig {
    std::size_t input_dim = 300;
    std::size_t hidden_dim = 150;  // per direction
    Pooling pooling = Pooling::FinalState;
};

template <class T>
using Sequence = std::vector<std::vector<T>>;

template <class T>
struct EncoderTrace {
    std::vector<LstmStep<T>> fwd;  // positions 0..n-1
    std::vector<LstmStep<T>> bwd;  // positions n-1..0
};

// Single-layer bidirectional LSTM. Parameters live in a shared store under
// `<prefix>.fwd.*` and `<prefix>.bwd.*`; the encoder only keeps indices, so
// copying the store copies the encoder's weights.
template <class T>
class BiLstmEncoder {
public:
    BiLstmEncoder() = default;

    BiLstmEncoder(std::string prefix, EncoderConfig cfg, ParameterStore<T>& store, Rng& rng,
                  double init_range)
        : prefix_(std::move(prefix)), cfg_(cfg) {
        if (cfg.input_dim == 0 || cfg.hidden_dim == 0)
            throw std::invalid_argument("encoder dims must be >= 1");
        const std::size_t H = cfg.hidden_dim, D = cfg.input_dim;
        auto init = [&](Shape shape) {
            Tensor<T> t(shape);
            for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-init_range, init_range));
            return t;
        };
        for (int dir = 0; dir < 2; ++dir) {
            const std::string p = prefix_ + (dir == 0 ? ".fwd" : ".bwd");
            Direction& d = dirs_[dir];
            d.W_x = store.add(p + ".W_x", ParamGroup::Other, init({4 * H, D}));
            d.W_h = store.add(p + ".W_h", ParamGroup::Other, init({4 * H, H}));
            d.b = store.add(p + ".b", ParamGroup::Other, Tensor<T>({4 * H}));
        }
    }

    const EncoderConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }
    std::size_t output_dim() const { return 2 * cfg_.hidden_dim; }

    std::vector<std::string> parameter_names(const ParameterStore<T>& store) const {
        std::vector<std::string> out;
        for (const auto& d : dirs_)
            for (std::size_t i : {d.W_x, d.W_h, d.b}) out.push_back(store[i].name);
        return out;
    }

    // Width-2H summary of the sequence; the zero vector for an empty one.
    std::vector<T> encode(const ParameterStore<T>& store, const Sequence<T>& xs,
                          EncoderTrace<T>* trace = nullptr) const {
        const std::size_t H = cfg_.hidden_dim, n = xs.size();
        for (const auto& x : xs)
            if (x.size() != cfg_.input_dim)
                throw ShapeError("encoder " + prefix_ + ": embedding width " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(cfg_.input_dim));
        std::vector<T> out(2 * H, T{0});
        if (n == 0) {
            if (trace) *trace = {};
            return out;
        }
        EncoderTrace<T> local;
        EncoderTrace<T>& tr = trace ? *trace : local;
        tr.fwd.clear();
        tr.bwd.clear();

        for (int dir = 0; dir < 2; ++dir) {
            const Direction& d = dirs_[dir];
            auto& steps = dir == 0 ? tr.fwd : tr.bwd;
            std::vector<T> h(H, T{0}), c(H, T{0});
            for (std::size_t k = 0; k < n; ++k) {
                const auto& x = xs[dir == 0 ? k : n - 1 - k];
                steps.push_back(lstm_cell(store.tensor(d.W_x), store.tensor(d.W_h), store.tensor(d.b),
                                          std::span<const T>(x), std::span<const T>(h),
                                          std::span<const T>(c)));
                h = steps.back().h;
                c = steps.back().c;
            }
        }

        if (cfg_.pooling == Pooling::FinalState) {
            std::copy(tr.fwd.back().h.begin(), tr.fwd.back().h.end(), out.begin());
            std::copy(tr.bwd.back().h.begin(), tr.bwd.back().h.end(), out.begin() + H);
        } else {
            const T inv = T{1} / static_cast<T>(n);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < H; ++j) {
                    out[j] += tr.fwd[k].h[j] * inv;
                    out[H + j] += tr.bwd[k].h[j] * inv;
                }
        }
        return out;
    }

    // Backpropagates dL/d(output) through a traced encode. Returns dL/dx for
    // each input position and accumulates weight gradients into the store.
    Sequence<T> backward(ParameterStore<T>& store, const EncoderTrace<T>& tr,
                         std::span<const T> dout) const {
        const std::size_t H = cfg_.hidden_dim, n = tr.fwd.size();
        Sequence<T> dxs(n, std::vector<T>(cfg_.input_dim, T{0}));
        if (n == 0) return dxs;
        detail::require(dout.size() == 2 * H, "encoder backward: gradient width mismatch");

        for (int dir = 0; dir < 2; ++dir) {
            const Direction& d = dirs_[dir];
            const auto& steps = dir == 0 ? tr.fwd : tr.bwd;
            auto dslice = dout.subspan(dir * H, H);

            std::vector<T> dh_next(H, T{0}), dc_next(H, T{0});
            for (std::size_t kk = n; kk-- > 0;) {
                std::vector<T> dh = dh_next;
                if (cfg_.pooling == Pooling::FinalState) {
                    if (kk == n - 1)
                        for (std::size_t j = 0; j < H; ++j) dh[j] += dslice[j];
                } else {
                    const T inv = T{1} / static_cast<T>(n);
                    for (std::size_t j = 0; j < H; ++j) dh[j] += dslice[j] * inv;
                }
                std::vector<T> dh_prev(H, T{0}), dc_prev(H, T{0});
                auto& dx = dxs[dir == 0 ? kk : n - 1 - kk];
                lstm_cell_backward(store.tensor(d.W_x), store.tensor(d.W_h), store.tensor(d.b), steps[kk],
                                   std::span<const T>(dh), std::span<const T>(dc_next),
                                   std::span<T>(dx), std::span<T>(dh_prev), std::span<T>(dc_prev));
                dh_next = std::move(dh_prev);
                dc_next = std::move(dc_prev);
            }
        }
        return dxs;
    }

private:
    struct Direction {
        std::size_t W_x = 0, W_h = 0, b = 0;
    };
    std::string prefix_;
    EncoderConfig cfg_;
    Direction dirs_[2];
};

}  // namespace dcnet

#endif  // DCNET_ENCODER_HPP
