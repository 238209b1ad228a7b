#pragma once

#include <complex>
#include <vector>

namespace rriqa::detail {

// 2-D DFT of a row-major width x height grid. Forward is unnormalized,
// inverse carries the 1/(width*height) factor. Thread-safe (FFTW planning
// is serialized internally).
void fft2d(int width, int height, std::vector<std::complex<double>>& data,
           bool inverse);

}  // namespace rriqa::detail
