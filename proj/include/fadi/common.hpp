#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace fadi {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input, inconsistent dimensions or unsupported configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A numeric object that must be invertible or definite is not.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

void require(bool cond, const std::string& msg);

// Throws InvalidArgument when any entry is NaN or infinite.
void require_finite(const Matrix& a, const char* what);

using WarningHandler = std::function<void(const std::string&)>;

// Warnings go to stderr, each distinct message once, unless a handler is
// installed; a handler sees every occurrence.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& msg);

}  // namespace fadi
