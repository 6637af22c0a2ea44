#include "dascd/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dascd::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 14;

struct Range {
  std::size_t lo, hi;
};

// Output indices o in [0, out) whose tap o*stride + t - padding lands inside [0, extent).
Range valid_outputs(std::size_t out, std::size_t extent, std::size_t t, const ConvGeometry& g) {
  std::size_t lo = 0;
  if (t < g.padding) lo = (g.padding - t + g.stride - 1) / g.stride;
  if (extent - 1 + g.padding < t) return {0, 0};
  const std::size_t hi = std::min(out, (extent - 1 + g.padding - t) / g.stride + 1);
  return {std::min(lo, hi), hi};
}

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
  const auto rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (long long ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = &c[i * n];
    std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = &b[p * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t cols) {
  const auto n_cols = static_cast<long long>(cols);
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (long long jj = 0; jj < n_cols; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    for (std::size_t i = 0; i < rows; ++i) out[j * rows + i] = in[i * cols + j];
  }
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<double> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const auto n_out = static_cast<long long>(g.c_out);
#pragma omp parallel for schedule(static) if (g.output_size() * g.c_in * k * k > kParallelWork)
  for (long long cc = 0; cc < n_out; ++cc) {
    const auto co = static_cast<std::size_t>(cc);
    double* plane = &output[co * oh * ow];
    std::fill(plane, plane + oh * ow, 0.0);
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const double* in = &input[ci * g.height * g.width];
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Range ry = valid_outputs(oh, g.height, ky, g);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Range rx = valid_outputs(ow, g.width, kx, g);
          const double w = weight[((co * g.c_in + ci) * k + ky) * k + kx];
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const double* irow = in + (oy * s + ky - g.padding) * g.width;
            double* orow = plane + oy * ow;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) orow[ox] += w * irow[ox * s + kx - g.padding];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const auto n_in = static_cast<long long>(g.c_in);
#pragma omp parallel for schedule(static) if (g.output_size() * g.c_in * k * k > kParallelWork)
  for (long long cc = 0; cc < n_in; ++cc) {
    const auto ci = static_cast<std::size_t>(cc);
    double* gin = &grad_input[ci * g.height * g.width];
    std::fill(gin, gin + g.height * g.width, 0.0);
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* gout = &grad_output[co * oh * ow];
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Range ry = valid_outputs(oh, g.height, ky, g);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Range rx = valid_outputs(ow, g.width, kx, g);
          const double w = weight[((co * g.c_in + ci) * k + ky) * k + kx];
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            double* irow = gin + (oy * s + ky - g.padding) * g.width;
            const double* orow = gout + oy * ow;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) irow[ox * s + kx - g.padding] += w * orow[ox];
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const auto n_out = static_cast<long long>(g.c_out);
#pragma omp parallel for schedule(static) if (g.output_size() * g.c_in * k * k > kParallelWork)
  for (long long cc = 0; cc < n_out; ++cc) {
    const auto co = static_cast<std::size_t>(cc);
    const double* gout = &grad_output[co * oh * ow];
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const double* in = &input[ci * g.height * g.width];
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Range ry = valid_outputs(oh, g.height, ky, g);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Range rx = valid_outputs(ow, g.width, kx, g);
          double acc = 0.0;
          for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
            const double* irow = in + (oy * s + ky - g.padding) * g.width;
            const double* orow = gout + oy * ow;
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) acc += orow[ox] * irow[ox * s + kx - g.padding];
          }
          grad_weight[((co * g.c_in + ci) * k + ky) * k + kx] = acc;
        }
      }
    }
  }
}

void avg_pool2_forward(std::size_t channels, std::size_t height, std::size_t width,
                       std::span<const double> input, std::span<double> output) {
  const std::size_t oh = height / 2, ow = width / 2;
  const auto n = static_cast<long long>(channels);
#pragma omp parallel for schedule(static) if (channels * height * width > kParallelWork)
  for (long long cc = 0; cc < n; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    for (std::size_t y = 0; y < oh; ++y) {
      const double* r0 = &input[(c * height + 2 * y) * width];
      const double* r1 = r0 + width;
      double* o = &output[(c * oh + y) * ow];
      for (std::size_t x = 0; x < ow; ++x) o[x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
  }
}

void avg_pool2_backward(std::size_t channels, std::size_t height, std::size_t width,
                        std::span<const double> grad_output, std::span<double> grad_input) {
  const std::size_t oh = height / 2, ow = width / 2;
  const auto n = static_cast<long long>(channels);
#pragma omp parallel for schedule(static) if (channels * height * width > kParallelWork)
  for (long long cc = 0; cc < n; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    for (std::size_t y = 0; y < height; ++y) {
      const double* o = &grad_output[(c * oh + y / 2) * ow];
      double* gi = &grad_input[(c * height + y) * width];
      for (std::size_t x = 0; x < width; ++x) gi[x] = 0.25 * o[x / 2];
    }
  }
}

}  // namespace dascd::kernels
