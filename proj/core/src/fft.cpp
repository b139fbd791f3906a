#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "rampcast/error.hpp"

namespace rampcast::detail {

namespace {

// FFTW's planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Fft2d::Fft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) fail(Errc::InvalidArgument, "empty FFT shape");
  const int r = int(rows), c = int(cols);
  double* real = fftw_alloc_real(rows * cols);
  fftw_complex* spec = fftw_alloc_complex(rows * (cols / 2 + 1));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_r2c_2d(r, c, real, spec, flags);
  inverse_plan_ = fftw_plan_dft_c2r_2d(r, c, spec, real, flags | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(spec);
  if (!forward_plan_ || !inverse_plan_) fail(Errc::InvalidArgument, "FFT planning failed");
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

const Fft2d& Fft2d::get(std::size_t rows, std::size_t cols) {
  std::mutex& m = planner_mutex();  // constructed before the cache, so it outlives it
  static std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Fft2d>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{rows, cols}];
  if (!slot) slot = std::make_unique<Fft2d>(rows, cols);
  return *slot;
}

std::vector<std::complex<double>> Fft2d::forward(std::span<const double> in) const {
  if (in.size() != rows_ * cols_) fail(Errc::InvalidArgument, "FFT input size mismatch");
  std::vector<double> buf(in.begin(), in.end());
  std::vector<std::complex<double>> out(spectrum_size());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> Fft2d::inverse(std::span<const std::complex<double>> spectrum) const {
  if (spectrum.size() != spectrum_size()) fail(Errc::InvalidArgument, "FFT spectrum size mismatch");
  std::vector<std::complex<double>> buf(spectrum.begin(), spectrum.end());
  std::vector<double> out(rows_ * cols_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(buf.data()),
                       out.data());
  const double scale = 1.0 / double(rows_ * cols_);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace rampcast::detail
