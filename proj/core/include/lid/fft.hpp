#pragma once

#include <complex>
#include <span>
#include <vector>

namespace lid::dsp {

// Real-input DFT of a fixed size backed by FFTW.  Plans are created under a
// process-wide lock; a RealFft instance itself is not thread-safe, distinct
// instances are.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  // out has n/2 + 1 bins.
  void forward(std::span<const double> in, std::vector<std::complex<double>>& out);
  // Unnormalized inverse: forward followed by inverse scales by n.
  void inverse(std::span<const std::complex<double>> in, std::vector<double>& out);

 private:
  std::size_t n_;
  double* real_ = nullptr;
  void* complex_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace lid::dsp
