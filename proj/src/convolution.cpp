#include "kinexch/convolution.hpp"

#include <algorithm>
#include <bit>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "kinexch/error.hpp"

namespace kinexch {

ConvBackend parse_backend(const std::string& name) {
  if (name == "direct") return ConvBackend::Direct;
  if (name == "fft") return ConvBackend::Fft;
  throw Error(ErrorKind::ConfigError, "unknown convolution backend '" + name + "'");
}

const char* to_string(ConvBackend backend) { return backend == ConvBackend::Direct ? "direct" : "fft"; }

namespace {
// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SelfConvolver::FftState {
  std::size_t padded = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit FftState(std::size_t n) {
    padded = std::bit_ceil(2 * n - 1);
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(padded);
    spec = fftw_alloc_complex(padded / 2 + 1);
    // FFTW_ESTIMATE picks the same algorithm every run; MEASURE would not.
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(padded), real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(padded), spec, real, FFTW_ESTIMATE);
  }

  ~FftState() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

SelfConvolver::SelfConvolver(std::size_t n, ConvBackend backend) : n_(n), backend_(backend) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty convolution input");
  if (backend_ == ConvBackend::Fft) fft_ = std::make_unique<FftState>(n);
}

SelfConvolver::~SelfConvolver() = default;
SelfConvolver::SelfConvolver(SelfConvolver&&) noexcept = default;
SelfConvolver& SelfConvolver::operator=(SelfConvolver&&) noexcept = default;

void SelfConvolver::convolve(std::span<const double> v, std::span<double> out) {
  if (v.size() != n_ || out.size() != output_size())
    throw Error(ErrorKind::InvalidArgument, "convolution buffer size mismatch");

  if (backend_ == ConvBackend::Direct) {
    // c[m] = 2 sum_{i < m-i} v[i] v[m-i] + [m even] v[m/2]^2
    for (std::size_t m = 0; m < out.size(); ++m) {
      const std::size_t lo = m >= n_ ? m - (n_ - 1) : 0;
      double acc = 0.0;
      std::size_t i = lo;
      for (; 2 * i < m; ++i) acc += v[i] * v[m - i];
      acc *= 2.0;
      if (2 * i == m) acc += v[i] * v[i];
      out[m] = acc;
    }
    return;
  }

  FftState& s = *fft_;
  std::copy(v.begin(), v.end(), s.real);
  std::fill(s.real + n_, s.real + s.padded, 0.0);
  fftw_execute(s.forward);
  const std::size_t bins = s.padded / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = s.spec[k][0], im = s.spec[k][1];
    s.spec[k][0] = re * re - im * im;
    s.spec[k][1] = 2.0 * re * im;
  }
  fftw_execute(s.backward);
  const double scale = 1.0 / static_cast<double>(s.padded);
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = s.real[m] * scale;
}

std::vector<double> SelfConvolver::convolve(std::span<const double> v) {
  std::vector<double> out(output_size());
  convolve(v, out);
  return out;
}

}  // namespace kinexch
