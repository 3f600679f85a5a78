#include "lid/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "lid/common.hpp"

namespace lid::dsp {

namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw InvalidArgument("FFT size must be at least 2");
  std::lock_guard lock(plan_mutex());
  real_ = fftw_alloc_real(n);
  auto* cplx = fftw_alloc_complex(n / 2 + 1);
  complex_ = cplx;
  const int size = static_cast<int>(n);
  forward_plan_ = fftw_plan_dft_r2c_1d(size, real_, cplx, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(size, cplx, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(complex_);
}

void RealFft::forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
  if (in.size() != n_) throw InvalidArgument("FFT input size mismatch");
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  const auto* c = static_cast<const fftw_complex*>(complex_);
  out.resize(n_ / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {c[k][0], c[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::vector<double>& out) {
  if (in.size() != n_ / 2 + 1) throw InvalidArgument("inverse FFT input size mismatch");
  auto* c = static_cast<fftw_complex*>(complex_);
  for (std::size_t k = 0; k < in.size(); ++k) {
    c[k][0] = in[k].real();
    c[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  out.assign(real_, real_ + n_);
}

}  // namespace lid::dsp
