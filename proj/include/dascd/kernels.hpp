#pragma once

// Dense compute kernels used by the autograd ops.
//
// Two implementations share one signature set:
//   dascd::kernels          cache-friendly loop orders, OpenMP-parallel over
//                           disjoint output slices (each output element is
//                           written by exactly one thread, so results do not
//                           depend on the thread count)
//   dascd::kernels::serial  textbook loops, kept as the test reference
//
// All buffers are row-major. Output buffers are overwritten, not accumulated.

#include <cstddef>
#include <span>

namespace dascd::kernels {

struct ConvGeometry {
  std::size_t c_in = 0, height = 0, width = 0;
  std::size_t c_out = 0, kernel = 0;
  std::size_t stride = 1, padding = 0;

  std::size_t out_height() const noexcept { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const noexcept { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t input_size() const noexcept { return c_in * height * width; }
  std::size_t weight_size() const noexcept { return c_out * c_in * kernel * kernel; }
  std::size_t output_size() const noexcept { return c_out * out_height() * out_width(); }
};

/// c (m×n) = a (m×k) · b (k×n)
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n);

/// out (cols×rows) = in (rows×cols)ᵀ
void transpose(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t cols);

/// Cross-correlation, no kernel flip. Bias is not applied here.
void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<double> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight);

/// 2×2 mean pooling with stride 2; height and width must be even.
void avg_pool2_forward(std::size_t channels, std::size_t height, std::size_t width,
                       std::span<const double> input, std::span<double> output);
void avg_pool2_backward(std::size_t channels, std::size_t height, std::size_t width,
                        std::span<const double> grad_output, std::span<double> grad_input);

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n);
void transpose(std::span<const double> in, std::span<double> out, std::size_t rows, std::size_t cols);
void conv2d_forward(const ConvGeometry& g, std::span<const double> input, std::span<const double> weight,
                    std::span<double> output);
void conv2d_backward_input(const ConvGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv2d_backward_weight(const ConvGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight);
void avg_pool2_forward(std::size_t channels, std::size_t height, std::size_t width,
                       std::span<const double> input, std::span<double> output);
void avg_pool2_backward(std::size_t channels, std::size_t height, std::size_t width,
                        std::span<const double> grad_output, std::span<double> grad_input);

}  // namespace serial

/// Threads OpenMP will use for the parallel kernels (1 without OpenMP).
int max_threads() noexcept;

}  // namespace dascd::kernels
