#ifndef DCNET_ERROR_HPP
#define DCNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dcnet {

// Bad input data: unreadable files, malformed rows, vocabulary mismatches,
// corrupt checkpoints.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values during training or a failed gradient check.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes that do not conform.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace dcnet

#endif  // DCNET_ERROR_HPP
