#ifndef DCNET_TENSOR_HPP
#define DCNET_TENSOR_HPP

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcnet/error.hpp"

namespace dcnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// Dense row-major array with an optional gradient slot of the same shape.
template <class T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{0})
        : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}
    Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != shape_size(shape_))
            throw ShapeError("tensor values do not match shape " + shape_string(shape_));
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
    std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }
    T& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    const T& at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    std::span<T> row(std::size_t r) { return std::span<T>(values_).subspan(r * cols(), cols()); }
    std::span<const T> row(std::size_t r) const {
        return std::span<const T>(values_).subspan(r * cols(), cols());
    }

    bool has_grad() const { return grad_.size() == values_.size() && !values_.empty(); }
    void ensure_grad() {
        if (grad_.size() != values_.size()) grad_.assign(values_.size(), T{0});
    }
    void zero_grad() { std::fill(grad_.begin(), grad_.end(), T{0}); }
    void drop_grad() { grad_.clear(); }
    std::span<T> grad() { return grad_; }
    std::span<const T> grad() const { return grad_; }
    std::span<T> grad_row(std::size_t r) { return std::span<T>(grad_).subspan(r * cols(), cols()); }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && values_ == o.values_; }

private:
    Shape shape_;
    std::vector<T> values_;
    std::vector<T> grad_;
};

enum class ParamGroup { Embedding, Other };

template <class T>
struct Parameter {
    std::string name;
    ParamGroup group = ParamGroup::Other;
    Tensor<T> tensor;
    // Rows excluded from updates (the PAD embedding row).
    std::vector<std::size_t> frozen_rows;
};

// Named parameters in registration order. Every parameter has a gradient slot.
template <class T>
class ParameterStore {
public:
    std::size_t add(std::string name, ParamGroup group, Tensor<T> t) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
        t.ensure_grad();
        index_.emplace(name, params_.size());
        params_.push_back(Parameter<T>{std::move(name), group, std::move(t), {}});
        return params_.size() - 1;
    }

    std::size_t size() const { return params_.size(); }
    Parameter<T>& operator[](std::size_t i) { return params_[i]; }
    const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }
    Tensor<T>& tensor(std::size_t i) { return params_[i].tensor; }
    const Tensor<T>& tensor(std::size_t i) const { return params_[i].tensor; }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
        return it->second;
    }
    Tensor<T>& tensor(const std::string& name) { return params_[index_of(name)].tensor; }
    const Tensor<T>& tensor(const std::string& name) const { return params_[index_of(name)].tensor; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad() {
        for (auto& p : params_) p.tensor.zero_grad();
    }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.tensor.size();
        return n;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& p : params_) out.push_back(p.name);
        return out;
    }

private:
    std::vector<Parameter<T>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dcnet

#endif  // DCNET_TENSOR_HPP
