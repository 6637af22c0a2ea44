#include "dascd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dascd/kernels.hpp"

namespace dascd::ops {

namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw StateError("op applied to an unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw StateError("operands belong to different graphs");
  return g;
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected a matrix, got " + to_string(t.shape()));
}

void require_scalar(const Tensor& t, const char* what) {
  if (t.size() != 1) throw ShapeError(std::string(what) + ": expected a scalar, got " + to_string(t.shape()));
}

kernels::ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, std::size_t stride,
                                    std::size_t padding) {
  if (input.rank() != 3) throw ShapeError("conv2d: input must be C×H×W, got " + to_string(input.shape()));
  if (kernels.rank() != 4) {
    throw ShapeError("conv2d: kernels must be C_out×C_in×k×k, got " + to_string(kernels.shape()));
  }
  if (kernels.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: kernel input channels " + to_string(kernels.shape()) + " do not match input " +
                     to_string(input.shape()));
  }
  if (kernels.dim(2) != kernels.dim(3)) throw ShapeError("conv2d: kernels must be square, got " + to_string(kernels.shape()));
  if (stride == 0) throw ContractError("conv2d: stride must be positive");
  kernels::ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), kernels.dim(0), kernels.dim(2), stride, padding};
  if (g.kernel > g.height + 2 * padding || g.kernel > g.width + 2 * padding) {
    throw ShapeError("conv2d: kernel " + to_string(kernels.shape()) + " larger than padded input " +
                     to_string(input.shape()) + " (padding " + std::to_string(padding) + ")");
  }
  return g;
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    gr.accumulate(a, go);
    gr.accumulate(b, go);
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    gr.accumulate(a, go);
    if (gr.requires_grad(b)) {
      Tensor neg = go;
      for (double& v : neg.storage()) v = -v;
      gr.accumulate(b, neg);
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    const auto av = a.value().data();
    const auto bv2 = b.value().data();
    if (gr.requires_grad(a)) {
      Tensor ga = go;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= bv2[i];
      gr.accumulate(a, ga);
    }
    if (gr.requires_grad(b)) {
      Tensor gb = go;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= av[i];
      gr.accumulate(b, gb);
    }
  });
}

Var scale(Var x, double factor) {
  Graph& g = graph_of(x);
  Tensor out = x.value();
  for (double& v : out.storage()) v *= factor;
  return g.record(std::move(out), {x}, [x, factor](Graph& gr, const Tensor& go) {
    Tensor gx = go;
    for (double& v : gx.storage()) v *= factor;
    gr.accumulate(x, gx);
  });
}

Var scale_by(Var s, Var x) {
  Graph& g = graph_of(s, x);
  require_scalar(s.value(), "scale_by");
  const double factor = s.value()[0];
  Tensor out = x.value();
  for (double& v : out.storage()) v *= factor;
  return g.record(std::move(out), {s, x}, [s, x](Graph& gr, const Tensor& go) {
    const double f = s.value()[0];
    if (gr.requires_grad(s)) {
      const auto xv = x.value().data();
      double acc = 0.0;
      for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * xv[i];
      gr.accumulate(s, Tensor::scalar(acc));
    }
    if (gr.requires_grad(x)) {
      Tensor gx = go;
      for (double& v : gx.storage()) v *= f;
      gr.accumulate(x, gx);
    }
  });
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  return g.record(Tensor::scalar(acc), {x}, [x](Graph& gr, const Tensor& go) {
    gr.accumulate(x, Tensor(x.shape(), go[0]));
  });
}

Var relu(Var x) {
  Graph& g = graph_of(x);
  Tensor out = x.value();
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return g.record(std::move(out), {x}, [x](Graph& gr, const Tensor& go) {
    const auto xv = x.value().data();
    Tensor gx = go;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (!(xv[i] > 0.0)) gx[i] = 0.0;
    }
    gr.accumulate(x, gx);
  });
}

Var reshape(Var x, Shape shape) {
  Graph& g = graph_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  return g.record(std::move(out), {x}, [x](Graph& gr, const Tensor& go) { gr.accumulate(x, go.data()); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: inner dimensions disagree, " + to_string(a.shape()) + " · " + to_string(b.shape()));
  }
  Tensor out(Shape{a.dim(0), b.dim(1)});
  kernels::matmul(a.data(), b.data(), out.data(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

namespace {

Tensor transposed(const Tensor& m) {
  Tensor out(Shape{m.dim(1), m.dim(0)});
  kernels::transpose(m.data(), out.data(), m.dim(0), m.dim(1));
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  Tensor out = matmul(a.value(), b.value());
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& go) {
    // dA = dC·Bᵀ, dB = Aᵀ·dC
    if (gr.requires_grad(a)) gr.accumulate(a, matmul(go, transposed(b.value())));
    if (gr.requires_grad(b)) gr.accumulate(b, matmul(transposed(a.value()), go));
  });
}

Var transpose(Var m) {
  Graph& g = graph_of(m);
  require_matrix(m.value(), "transpose");
  return g.record(transposed(m.value()), {m},
                  [m](Graph& gr, const Tensor& go) { gr.accumulate(m, transposed(go)); });
}

Tensor softmax_rows(const Tensor& m) {
  require_matrix(m, "softmax_rows");
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out(m.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &m.data()[r * cols];
    double* o = &out.data()[r * cols];
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  return out;
}

Var softmax_rows(Var m) {
  Graph& g = graph_of(m);
  Tensor out = softmax_rows(m.value());
  Tensor probs = out;
  return g.record(std::move(out), {m}, [m, probs = std::move(probs)](Graph& gr, const Tensor& go) {
    // dx_c = p_c·(go_c − Σ_k p_k·go_k) per row
    const std::size_t rows = probs.dim(0), cols = probs.dim(1);
    Tensor gx(probs.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += probs.at(r, c) * go.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) = probs.at(r, c) * (go.at(r, c) - dot);
    }
    gr.accumulate(m, gx);
  });
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t padding) {
  const auto geo = conv_geometry(input, kernels, stride, padding);
  Tensor out(Shape{geo.c_out, geo.out_height(), geo.out_width()});
  kernels::conv2d_forward(geo, input.data(), kernels.data(), out.data());
  return out;
}

Var conv2d(Var input, Var kernels, std::optional<Var> bias, std::size_t stride, std::size_t padding) {
  Graph& g = graph_of(input, kernels);
  const auto geo = conv_geometry(input.value(), kernels.value(), stride, padding);
  Tensor out = conv2d(input.value(), kernels.value(), stride, padding);
  const std::size_t plane = geo.out_height() * geo.out_width();
  std::vector<Var> inputs{input, kernels};
  if (bias) {
    if (bias->graph() != &g) throw StateError("conv2d: bias belongs to a different graph");
    if (bias->value().size() != geo.c_out) {
      throw ShapeError("conv2d: bias " + to_string(bias->shape()) + " does not match " +
                       std::to_string(geo.c_out) + " output channels");
    }
    const auto bv = bias->value().data();
    for (std::size_t co = 0; co < geo.c_out; ++co)
      for (std::size_t p = 0; p < plane; ++p) out[co * plane + p] += bv[co];
    inputs.push_back(*bias);
  }
  return g.record(std::move(out), inputs, [input, kernels, bias, geo, plane](Graph& gr, const Tensor& go) {
    if (gr.requires_grad(input)) {
      Tensor gi(input.shape());
      kernels::conv2d_backward_input(geo, go.data(), kernels.value().data(), gi.data());
      gr.accumulate(input, gi);
    }
    if (gr.requires_grad(kernels)) {
      Tensor gw(kernels.shape());
      kernels::conv2d_backward_weight(geo, input.value().data(), go.data(), gw.data());
      gr.accumulate(kernels, gw);
    }
    if (bias && gr.requires_grad(*bias)) {
      Tensor gb(bias->shape());
      for (std::size_t co = 0; co < geo.c_out; ++co) {
        double acc = 0.0;
        for (std::size_t p = 0; p < plane; ++p) acc += go[co * plane + p];
        gb[co] = acc;
      }
      gr.accumulate(*bias, gb);
    }
  });
}

Var avg_pool2(Var input) {
  Graph& g = graph_of(input);
  const Tensor& x = input.value();
  if (x.rank() != 3 || x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0) {
    throw ShapeError("avg_pool2: need C×H×W with even H and W, got " + to_string(x.shape()));
  }
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out(Shape{c, h / 2, w / 2});
  kernels::avg_pool2_forward(c, h, w, x.data(), out.data());
  return g.record(std::move(out), {input}, [input, c, h, w](Graph& gr, const Tensor& go) {
    Tensor gi(input.shape());
    kernels::avg_pool2_backward(c, h, w, go.data(), gi.data());
    gr.accumulate(input, gi);
  });
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.empty()) throw ContractError("weighted_sum: no terms");
  if (terms.size() != weights.size()) throw ContractError("weighted_sum: terms and weights differ in length");
  Graph& g = graph_of(terms[0]);
  double acc = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].graph() != &g) throw StateError("weighted_sum: terms belong to different graphs");
    require_scalar(terms[k].value(), "weighted_sum");
    acc += weights[k] * terms[k].value()[0];
  }
  std::vector<Var> ins(terms.begin(), terms.end());
  std::vector<double> ws(weights.begin(), weights.end());
  return g.record(Tensor::scalar(acc), ins, [ins, ws](Graph& gr, const Tensor& go) {
    for (std::size_t k = 0; k < ins.size(); ++k) gr.accumulate(ins[k], Tensor::scalar(ws[k] * go[0]));
  });
}

}  // namespace dascd::ops
