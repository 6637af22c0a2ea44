#include "dascd/kernels.hpp"

#include <algorithm>

namespace dascd::kernels::serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

void transpose(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
}

namespace {

// Signed input coordinate for output position o and kernel tap t.
inline long long tap(std::size_t o, std::size_t t, const ConvGeometry& g) {
  return static_cast<long long>(o * g.stride + t) - static_cast<long long>(g.padding);
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<double> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t co = 0; co < g.c_out; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < g.c_in; ++ci) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long long iy = tap(oy, ky, g), ix = tap(ox, kx, g);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(g.height) ||
                  ix >= static_cast<long long>(g.width))
                continue;
              acc += weight[((co * g.c_in + ci) * k + ky) * k + kx] *
                     input[(ci * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)];
            }
          }
        }
        output[(co * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (std::size_t co = 0; co < g.c_out; ++co)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t ci = 0; ci < g.c_in; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long long iy = tap(oy, ky, g), ix = tap(ox, kx, g);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(g.height) ||
                  ix >= static_cast<long long>(g.width))
                continue;
              grad_input[(ci * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] +=
                  weight[((co * g.c_in + ci) * k + ky) * k + kx] * grad_output[(co * oh + oy) * ow + ox];
            }
}

void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
  for (std::size_t co = 0; co < g.c_out; ++co)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t ci = 0; ci < g.c_in; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long long iy = tap(oy, ky, g), ix = tap(ox, kx, g);
              if (iy < 0 || ix < 0 || iy >= static_cast<long long>(g.height) ||
                  ix >= static_cast<long long>(g.width))
                continue;
              grad_weight[((co * g.c_in + ci) * k + ky) * k + kx] +=
                  input[(ci * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] *
                  grad_output[(co * oh + oy) * ow + ox];
            }
}

void avg_pool2_forward(std::size_t channels, std::size_t height, std::size_t width,
                       std::span<const double> input, std::span<double> output) {
  const std::size_t oh = height / 2, ow = width / 2;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        const double* p = &input[(c * height + 2 * y) * width + 2 * x];
        output[(c * oh + y) * ow + x] = 0.25 * (p[0] + p[1] + p[width] + p[width + 1]);
      }
}

void avg_pool2_backward(std::size_t channels, std::size_t height, std::size_t width,
                        std::span<const double> grad_output, std::span<double> grad_input) {
  const std::size_t oh = height / 2, ow = width / 2;
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        grad_input[(c * height + y) * width + x] = 0.25 * grad_output[(c * oh + y / 2) * ow + x / 2];
}

}  // namespace dascd::kernels::serial
