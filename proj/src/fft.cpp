#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "rriqa/errors.hpp"

namespace rriqa::detail {

namespace {
std::mutex g_plan_mutex;  // FFTW planning is not thread-safe
}

void fft2d(int width, int height, std::vector<std::complex<double>>& data,
           bool inverse) {
  if (width <= 0 || height <= 0 ||
      data.size() != static_cast<std::size_t>(width) * height)
    fail(Err::BadDimensions, "fft2d: buffer does not match dimensions");

  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    // In-place c2c; FFTW wants the slow dimension (rows) first.
    plan = fftw_plan_dft_2d(height, width, ptr, ptr,
                            inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  if (!plan) fail(Err::BadDimensions, "fftw plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
  if (inverse) {
    const double scale = 1.0 / (static_cast<double>(width) * height);
    for (auto& v : data) v *= scale;
  }
}

}  // namespace rriqa::detail
