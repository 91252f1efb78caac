#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pgos {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Bad input from the outside world: configs, CLI arguments, dataset files,
/// stage artifacts that do not fit together. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A file that exists but cannot be parsed. The message names the offending
/// file and line.
class ParseError : public ValidationError {
 public:
  explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

/// Non-finite values in a numeric computation. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

void log_warn(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace pgos
