#include "hvlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace hvlab::fft {
namespace {

constexpr std::size_t kBatch = 4096;

// Plan creation is serialized; execution via fftw_execute_dft is thread-safe.
// FFTW_UNALIGNED lets one cached plan run on any buffer.
std::mutex plan_mutex;

using PlanKey = std::tuple<std::size_t /*n*/, std::size_t /*stride*/,
                           std::size_t /*howmany*/, int /*sign*/>;

fftw_plan get_plan(std::size_t n, std::size_t stride, std::size_t howmany, int sign,
                   fftw_complex* buf) {
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  PlanKey key{n, stride, howmany, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  int nn = static_cast<int>(n);
  int is = static_cast<int>(stride);
  int dist = stride == 1 ? nn : 1;
  // Measured plans pay off across the many repeated executions; planning
  // happens on scratch storage so caller data survives.
  const std::size_t span =
      stride == 1 ? n * howmany : (n - 1) * stride + howmany;
  auto* scratch = static_cast<fftw_complex*>(
      fftw_malloc(span * sizeof(fftw_complex)));
  fftw_plan plan = fftw_plan_many_dft(
      1, &nn, static_cast<int>(howmany), scratch, nullptr, is, dist, scratch,
      nullptr, is, dist, sign, FFTW_MEASURE | FFTW_UNALIGNED);
  fftw_free(scratch);
  cache.emplace(key, plan);
  (void)buf;
  return plan;
}

}  // namespace

void transform_axis(std::complex<double>* data, std::span<const std::size_t> shape,
                    std::size_t axis, int sign) {
  std::size_t n = shape[axis];
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) stride *= shape[a];
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];

  if (stride == 1) {
    // Contiguous lines, batched back-to-back across all outer blocks.
    std::size_t done = 0;
    while (done < outer) {
      std::size_t batch = std::min(kBatch, outer - done);
      auto* p = reinterpret_cast<fftw_complex*>(data + done * n);
      fftw_execute_dft(get_plan(n, 1, batch, sign, p), p, p);
      done += batch;
    }
    return;
  }
  // Interleaved lines: within each outer block, line j starts at offset j
  // and steps by `stride`.
  for (std::size_t o = 0; o < outer; ++o) {
    std::complex<double>* block = data + o * n * stride;
    std::size_t done = 0;
    while (done < stride) {
      std::size_t batch = std::min(kBatch, stride - done);
      auto* p = reinterpret_cast<fftw_complex*>(block + done);
      fftw_execute_dft(get_plan(n, stride, batch, sign, p), p, p);
      done += batch;
    }
  }
}

void backward_axis(std::complex<double>* data, std::span<const std::size_t> shape,
                   std::size_t axis) {
  transform_axis(data, shape, axis, +1);
  std::size_t total = 1;
  for (auto s : shape) total *= s;
  double scale = 1.0 / static_cast<double>(shape[axis]);
  for (std::size_t i = 0; i < total; ++i) data[i] *= scale;
}

void forward_all(std::complex<double>* data, std::span<const std::size_t> shape) {
  for (std::size_t a = 0; a < shape.size(); ++a) transform_axis(data, shape, a, -1);
}

void backward_all(std::complex<double>* data, std::span<const std::size_t> shape) {
  std::size_t total = 1;
  for (auto s : shape) total *= s;
  for (std::size_t a = 0; a < shape.size(); ++a) transform_axis(data, shape, a, +1);
  double scale = 1.0 / static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i) data[i] *= scale;
}

}  // namespace hvlab::fft
