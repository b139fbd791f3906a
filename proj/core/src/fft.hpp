#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rampcast::detail {

/// Real 2-D transform of one row-major grid shape. Plans are created once per shape and
/// shared; execution is thread safe.
class Fft2d {
 public:
  static const Fft2d& get(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t half_cols() const noexcept { return cols_ / 2 + 1; }
  std::size_t spectrum_size() const noexcept { return rows_ * half_cols(); }

  /// Unnormalized forward transform into rows x (cols/2 + 1) coefficients.
  std::vector<std::complex<double>> forward(std::span<const double> in) const;
  /// Inverse transform including the 1 / (rows * cols) factor.
  std::vector<double> inverse(std::span<const std::complex<double>> spectrum) const;

  /// Signed frequency index of spectrum row i.
  double row_frequency(std::size_t i) const noexcept {
    return i <= rows_ / 2 ? double(i) : double(i) - double(rows_);
  }

  Fft2d(std::size_t rows, std::size_t cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

 private:
  std::size_t rows_, cols_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace rampcast::detail
