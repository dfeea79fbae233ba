#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcbf {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

enum class ErrorCode {
  invalid_argument,
  degenerate_instance,
  degenerate_anchor,
  cannot_certify,
  numerical_degeneracy,
  refused,
  config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

/// Dense complex matrix, column-major. Columns are contiguous so that a
/// channel g_k or a surrogate column f_k can be handed to the kernels as a
/// span.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<Complex> col(std::size_t k) {
    return {data_.data() + k * rows_, rows_};
  }
  std::span<const Complex> col(std::size_t k) const {
    return {data_.data() + k * rows_, rows_};
  }

  Complex& operator()(std::size_t i, std::size_t k) { return data_[k * rows_ + i]; }
  Complex operator()(std::size_t i, std::size_t k) const { return data_[k * rows_ + i]; }

  std::span<const Complex> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CVector data_;
};

/// Complex vectors viewed as interleaved (re, im) doubles. std::complex
/// guarantees this layout.
inline std::span<const double> as_reals(std::span<const Complex> x) {
  return {reinterpret_cast<const double*>(x.data()), 2 * x.size()};
}
inline std::span<double> as_reals(std::span<Complex> x) {
  return {reinterpret_cast<double*>(x.data()), 2 * x.size()};
}

}  // namespace mcbf
