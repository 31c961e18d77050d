#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kinexch {

enum class ConvBackend { Direct, Fft };

ConvBackend parse_backend(const std::string& name);
const char* to_string(ConvBackend backend);

// Full linear self-convolution c[m] = sum_{i+j=m} v[i] v[j], m = 0..2n-2.
// One instance is bound to an input length and keeps its FFT plan and
// scratch buffers, so evolving a density re-plans nothing.
class SelfConvolver {
 public:
  SelfConvolver(std::size_t n, ConvBackend backend);
  ~SelfConvolver();
  SelfConvolver(SelfConvolver&&) noexcept;
  SelfConvolver& operator=(SelfConvolver&&) noexcept;

  std::size_t input_size() const { return n_; }
  std::size_t output_size() const { return 2 * n_ - 1; }
  ConvBackend backend() const { return backend_; }

  void convolve(std::span<const double> v, std::span<double> out);
  std::vector<double> convolve(std::span<const double> v);

 private:
  struct FftState;
  std::size_t n_;
  ConvBackend backend_;
  std::unique_ptr<FftState> fft_;
};

}  // namespace kinexch
