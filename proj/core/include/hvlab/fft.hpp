#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hvlab::fft {

// In-place unnormalized DFT along one axis of a row-major multi-array.
// sign = -1 forward, +1 backward. Plans are cached internally.
void transform_axis(std::complex<double>* data, std::span<const std::size_t> shape,
                    std::size_t axis, int sign);

// In-place DFT over all axes. Backward transform includes the 1/prod(n) scale,
// so backward(forward(x)) == x up to rounding.
void forward_all(std::complex<double>* data, std::span<const std::size_t> shape);
void backward_all(std::complex<double>* data, std::span<const std::size_t> shape);

// Normalized single-axis pair.
inline void forward_axis(std::complex<double>* data, std::span<const std::size_t> shape,
                         std::size_t axis) {
  transform_axis(data, shape, axis, -1);
}
void backward_axis(std::complex<double>* data, std::span<const std::size_t> shape,
                   std::size_t axis);

}  // namespace hvlab::fft
