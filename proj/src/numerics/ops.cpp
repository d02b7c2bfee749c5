// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/numerics/ops.hpp"

#include <fmt/format.h>

#include <cmath>

#include "shadowgrid/error.hpp"

namespace shadowgrid::numerics {
namespace {

using ConstStrided = Eigen::Map<const RowMatrixXd, 0, Eigen::OuterStride<>>;
using Strided = Eigen::Map<RowMatrixXd, 0, Eigen::OuterStride<>>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{}: {} vs {}", op, shape_string(a.shape()), shape_string(b.shape())));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Elementwise op whose derivative is expressed through (x, y = f(x)).
template <typename Fwd, typename Deriv>
Var pointwise(const Var& x, Fwd fwd, Deriv deriv) {
  Tape& tape = x.tape();
  Tensor out(x.shape());
  out.flat() = x.value().flat().unaryExpr(fwd);
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, deriv](Index self) {
    const auto& xv = tape.value(xi).flat();
    const auto& yv = tape.value(self).flat();
    const auto& g = tape.grad(self).flat();
    auto& gx = tape.grad(xi).flat();
    for (Index i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

void accumulate(Tape& tape, Index id, const auto& expr) {
  if (tape.requires_grad(id)) tape.grad(id).flat() += expr;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("matmul: {} x {}", shape_string(a.shape()), shape_string(b.shape())));
  }
  Tape& tape = a.tape();
  Tensor out({a.shape()[0], b.shape()[1]});
  out.matrix().noalias() = a.value().matrix() * b.value().matrix();
  const Index ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {a, b}, [&tape, ai, bi](Index self) {
    const auto g = tape.grad(self).matrix();
    if (tape.requires_grad(ai)) tape.grad(ai).matrix().noalias() += g * tape.value(bi).matrix().transpose();
    if (tape.requires_grad(bi)) tape.grad(bi).matrix().noalias() += tape.value(ai).matrix().transpose() * g;
  });
}

Var linear(const Var& x, const Var& w) {
  if (w.value().rank() != 2 || x.value().cols() != w.shape()[0]) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("linear: {} x {}", shape_string(x.shape()), shape_string(w.shape())));
  }
  Tape& tape = x.tape();
  Shape shape = x.shape();
  shape.back() = w.shape()[1];
  Tensor out(shape);
  out.matrix().noalias() = x.value().matrix() * w.value().matrix();
  const Index xi = x.id(), wi = w.id();
  return tape.record(std::move(out), {x, w}, [&tape, xi, wi](Index self) {
    const auto g = tape.grad(self).matrix();
    if (tape.requires_grad(xi)) tape.grad(xi).matrix().noalias() += g * tape.value(wi).matrix().transpose();
    if (tape.requires_grad(wi)) tape.grad(wi).matrix().noalias() += tape.value(xi).matrix().transpose() * g;
  });
}

Var add_bias(const Var& x, const Var& b) {
  if (b.value().size() != x.value().cols()) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("add_bias: {} + {}", shape_string(x.shape()), shape_string(b.shape())));
  }
  Tape& tape = x.tape();
  Tensor out = x.value();
  out.matrix().rowwise() += b.value().flat().transpose();
  const Index xi = x.id(), bi = b.id();
  return tape.record(std::move(out), {x, b}, [&tape, xi, bi](Index self) {
    const auto& g = tape.grad(self);
    accumulate(tape, xi, g.flat());
    if (tape.requires_grad(bi)) tape.grad(bi).flat() += g.matrix().colwise().sum().transpose();
  });
}

Var relu(const Var& x) {
  return pointwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return pointwise(x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& x) {
  return pointwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(const Var& x) {
  return pointwise(
      x, [](double v) { return (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) { return stable_sigmoid(v); });
}

Var affine(const Var& x, double scale, double shift) {
  Tape& tape = x.tape();
  Tensor out(x.shape());
  out.flat() = (x.value().flat().array() * scale + shift).matrix();
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, scale](Index self) {
    tape.grad(xi).flat() += scale * tape.grad(self).flat();
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tape& tape = a.tape();
  Tensor out(a.shape());
  out.flat() = a.value().flat() + b.value().flat();
  const Index ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {a, b}, [&tape, ai, bi](Index self) {
    const auto& g = tape.grad(self).flat();
    accumulate(tape, ai, g);
    accumulate(tape, bi, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tape& tape = a.tape();
  Tensor out(a.shape());
  out.flat() = a.value().flat() - b.value().flat();
  const Index ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {a, b}, [&tape, ai, bi](Index self) {
    const auto& g = tape.grad(self).flat();
    accumulate(tape, ai, g);
    if (tape.requires_grad(bi)) tape.grad(bi).flat() -= g;
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tape& tape = a.tape();
  Tensor out(a.shape());
  out.flat() = a.value().flat().cwiseProduct(b.value().flat());
  const Index ai = a.id(), bi = b.id();
  return tape.record(std::move(out), {a, b}, [&tape, ai, bi](Index self) {
    const auto& g = tape.grad(self).flat();
    accumulate(tape, ai, g.cwiseProduct(tape.value(bi).flat()));
    accumulate(tape, bi, g.cwiseProduct(tape.value(ai).flat()));
  });
}

Var reshape(const Var& x, Shape shape) {
  Tape& tape = x.tape();
  Tensor out = x.value().reshaped(std::move(shape));
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi](Index self) {
    tape.grad(xi).flat() += tape.grad(self).flat();
  });
}

Var concat_last(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_last of nothing");
  Tape& tape = parts.front().tape();
  Shape shape = parts.front().shape();
  Index cols = 0;
  for (const auto& p : parts) {
    Shape lead = p.shape();
    lead.pop_back();
    Shape expect = shape;
    expect.pop_back();
    if (lead != expect) throw Error(ErrorKind::ShapeMismatch, "concat_last: leading shapes differ");
    cols += p.value().cols();
  }
  shape.back() = cols;
  Tensor out(shape);
  std::vector<Index> ids, offsets;
  Index offset = 0;
  for (const auto& p : parts) {
    out.matrix().middleCols(offset, p.value().cols()) = p.value().matrix();
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.value().cols();
  }
  return tape.record(std::move(out), parts, [&tape, ids, offsets](Index self) {
    const auto g = tape.grad(self).matrix();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tape.requires_grad(ids[k])) continue;
      auto& gk = tape.grad(ids[k]);
      gk.matrix() += g.middleCols(offsets[k], gk.cols());
    }
  });
}

Var slice_last(const Var& x, Index begin, Index count) {
  if (begin < 0 || count <= 0 || begin + count > x.value().cols()) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("slice_last [{}, +{}) of {}", begin, count, shape_string(x.shape())));
  }
  Tape& tape = x.tape();
  Shape shape = x.shape();
  shape.back() = count;
  Tensor out(shape);
  out.matrix() = x.value().matrix().middleCols(begin, count);
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, begin, count](Index self) {
    tape.grad(xi).matrix().middleCols(begin, count) += tape.grad(self).matrix();
  });
}

Var select_step(const Var& x, Index t) {
  if (x.value().rank() != 3 || t < 0 || t >= x.shape()[1]) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("select_step {} of {}", t, shape_string(x.shape())));
  }
  Tape& tape = x.tape();
  const Index a = x.shape()[0], steps = x.shape()[1], c = x.shape()[2];
  Tensor out({a, c});
  out.matrix() = ConstStrided(x.value().data() + t * c, a, c, Eigen::OuterStride<>(steps * c));
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, t, a, steps, c](Index self) {
    Strided(tape.grad(xi).data() + t * c, a, c, Eigen::OuterStride<>(steps * c)) += tape.grad(self).matrix();
  });
}

Var gather_rows(const Var& x, std::vector<Index> indices) {
  Tape& tape = x.tape();
  const Index rows = x.value().rows(), cols = x.value().cols();
  for (Index i : indices) {
    if (i < 0 || i >= rows) throw Error(ErrorKind::ShapeMismatch, fmt::format("gather_rows: index {} of {}", i, rows));
  }
  Tensor out({static_cast<Index>(indices.size()), cols});
  const auto xm = x.value().matrix();
  auto om = out.matrix();
  for (std::size_t r = 0; r < indices.size(); ++r) om.row(static_cast<Index>(r)) = xm.row(indices[r]);
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, idx = std::move(indices)](Index self) {
    const auto g = tape.grad(self).matrix();
    auto gx = tape.grad(xi).matrix();
    for (std::size_t r = 0; r < idx.size(); ++r) gx.row(idx[r]) += g.row(static_cast<Index>(r));
  });
}

Var temporal_conv1d(const Var& x, const Var& kernel) {
  if (x.value().rank() != 3 || kernel.value().rank() != 3 || x.shape()[2] != kernel.shape()[1]) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("temporal_conv1d: {} * {}", shape_string(x.shape()), shape_string(kernel.shape())));
  }
  const Index n = x.shape()[0], steps = x.shape()[1], cin = x.shape()[2];
  const Index k = kernel.shape()[0], cout = kernel.shape()[2];
  if (steps < k) {
    throw Error(ErrorKind::WindowTooShort, fmt::format("temporal_conv1d: T={} < K={}", steps, k));
  }
  const Index out_steps = steps - k + 1;
  Tape& tape = x.tape();

  // im2col: row (i, t) holds [x(i, t), x(i, t+1), ..., x(i, t+K-1)].
  auto cols = std::make_shared<RowMatrixXd>(n * out_steps, k * cin);
  const auto xm = x.value().matrix();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) {
      cols->block(i * out_steps, j * cin, out_steps, cin) = xm.middleRows(i * steps + j, out_steps);
    }
  }
  Tensor out({n, out_steps, cout});
  const Eigen::Map<const RowMatrixXd> w(kernel.value().data(), k * cin, cout);
  out.matrix().noalias() = *cols * w;

  const Index xi = x.id(), ki = kernel.id();
  return tape.record(std::move(out), {x, kernel}, [&tape, xi, ki, cols, n, steps, cin, k, cout, out_steps](Index self) {
    const auto g = tape.grad(self).matrix();
    if (tape.requires_grad(ki)) {
      Eigen::Map<RowMatrixXd> gw(tape.grad(ki).data(), k * cin, cout);
      gw.noalias() += cols->transpose() * g;
    }
    if (tape.requires_grad(xi)) {
      const Eigen::Map<const RowMatrixXd> w(tape.value(ki).data(), k * cin, cout);
      const RowMatrixXd gcols = g * w.transpose();
      auto gx = tape.grad(xi).matrix();
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < k; ++j) {
          gx.middleRows(i * steps + j, out_steps) += gcols.block(i * out_steps, j * cin, out_steps, cin);
        }
      }
    }
  });
}

Var glu(const Var& x) {
  const Index width = x.value().cols();
  if (width % 2 != 0) throw Error(ErrorKind::OddChannels, fmt::format("glu on {} channels", width));
  const Index half = width / 2;
  Tape& tape = x.tape();
  Shape shape = x.shape();
  shape.back() = half;
  const auto xm = x.value().matrix();
  auto gate = std::make_shared<RowMatrixXd>(xm.rightCols(half).unaryExpr(&stable_sigmoid));
  Tensor out(shape);
  out.matrix() = xm.leftCols(half).cwiseProduct(*gate);
  const Index xi = x.id();
  return tape.record(std::move(out), {x}, [&tape, xi, half, gate](Index self) {
    const auto g = tape.grad(self).matrix();
    const auto p = tape.value(xi).matrix().leftCols(half);
    auto gx = tape.grad(xi).matrix();
    gx.leftCols(half) += g.cwiseProduct(*gate);
    gx.rightCols(half).array() +=
        g.array() * p.array() * gate->array() * (1.0 - gate->array());
  });
}

Var scatter_square(const Var& values, Index groups, Index n, std::vector<Index> rows, std::vector<Index> cols) {
  const Index edges = static_cast<Index>(rows.size());
  if (cols.size() != rows.size() || values.value().size() != groups * edges) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("scatter_square: {} values for {} groups x {} entries", values.value().size(), groups, edges));
  }
  for (std::size_t e = 0; e < rows.size(); ++e) {
    if (rows[e] < 0 || rows[e] >= n || cols[e] < 0 || cols[e] >= n) {
      throw Error(ErrorKind::ShapeMismatch, "scatter_square: index out of range");
    }
  }
  Tape& tape = values.tape();
  Tensor out({groups, n, n}, 0.0);
  const auto& v = values.value();
  for (Index g = 0; g < groups; ++g) {
    for (Index e = 0; e < edges; ++e) out[(g * n + rows[e]) * n + cols[e]] = v[g * edges + e];
  }
  const Index vi = values.id();
  return tape.record(std::move(out), {values},
                     [&tape, vi, groups, n, edges, r = std::move(rows), c = std::move(cols)](Index self) {
                       const auto& g = tape.grad(self);
                       auto& gv = tape.grad(vi);
                       for (Index k = 0; k < groups; ++k) {
                         for (Index e = 0; e < edges; ++e) gv[k * edges + e] += g[(k * n + r[e]) * n + c[e]];
                       }
                     });
}

Var normalized_adjacency(const Var& a) {
  const auto& av = a.value();
  if (!((av.rank() == 3 && av.dim(1) == av.dim(2)) || (av.rank() == 2 && av.dim(0) == av.dim(1)))) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("normalized_adjacency on {}", shape_string(av.shape())));
  }
  if ((av.flat().array() < 0.0).any()) throw Error(ErrorKind::NegativeWeight, "adjacency has negative entries");
  const Index n = av.dim(av.rank() - 1);
  const Index groups = av.size() / (n * n);
  Tape& tape = a.tape();
  Tensor out(av.shape());
  // s = (rowsum(A) + 1)^{-1/2} per group, kept for the backward pass.
  auto scale = std::make_shared<RowMatrixXd>(groups, n);
  for (Index g = 0; g < groups; ++g) {
    const Eigen::Map<const RowMatrixXd> m(av.data() + g * n * n, n, n);
    Eigen::Map<RowMatrixXd> o(out.data() + g * n * n, n, n);
    const VectorXd s = (m.rowwise().sum().array() + 1.0).rsqrt().matrix();
    scale->row(g) = s.transpose();
    o = s.asDiagonal() * (m + RowMatrixXd::Identity(n, n)) * s.asDiagonal();
  }
  const Index ai = a.id();
  return tape.record(std::move(out), {a}, [&tape, ai, n, groups, scale](Index self) {
    const auto& gout = tape.grad(self);
    auto& ga = tape.grad(ai);
    for (Index g = 0; g < groups; ++g) {
      const Eigen::Map<const RowMatrixXd> G(gout.data() + g * n * n, n, n);
      const Eigen::Map<const RowMatrixXd> m(tape.value(ai).data() + g * n * n, n, n);
      Eigen::Map<RowMatrixXd> gm(ga.data() + g * n * n, n, n);
      const VectorXd s = scale->row(g).transpose();
      const RowMatrixXd at = m + RowMatrixXd::Identity(n, n);
      // L_kl = At_kl s_k s_l;  ds_i/dd_i = -s_i^3 / 2;  d_i = sum_j At_ij.
      const RowMatrixXd gat = G.cwiseProduct(at);
      const VectorXd gs = gat * s + gat.transpose() * s;
      const VectorXd gd = -0.5 * gs.cwiseProduct(s.cwiseAbs2()).cwiseProduct(s);
      gm += s.asDiagonal() * G * s.asDiagonal();
      gm.colwise() += gd;
    }
  });
}

Var spatial_mix(const Var& operators, const Var& h, Index n, Index stride, Index offset) {
  const auto& ov = operators.value();
  const auto& hv = h.value();
  if (ov.rank() != 3 || ov.dim(1) != n || ov.dim(2) != n || hv.rank() != 3 || hv.dim(0) % n != 0) {
    throw Error(ErrorKind::ShapeMismatch, fmt::format("spatial_mix: operators {} with h {} (n={})",
                                                      shape_string(ov.shape()), shape_string(hv.shape()), n));
  }
  const Index batch = hv.dim(0) / n, steps = hv.dim(1), c = hv.dim(2);
  if (offset < 0 || (batch - 1) * stride + offset + steps > ov.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch, "spatial_mix: operator index out of range");
  }
  Tape& tape = h.tape();
  Tensor out(hv.shape());
  const Eigen::OuterStride<> os(steps * c);
  for (Index b = 0; b < batch; ++b) {
    for (Index t = 0; t < steps; ++t) {
      const Eigen::Map<const RowMatrixXd> l(ov.data() + (b * stride + offset + t) * n * n, n, n);
      const ConstStrided x(hv.data() + (b * n * steps + t) * c, n, c, os);
      Strided(out.data() + (b * n * steps + t) * c, n, c, os).noalias() = l * x;
    }
  }
  const Index oi = operators.id(), hi = h.id();
  return tape.record(std::move(out), {operators, h}, [&tape, oi, hi, n, stride, offset, batch, steps, c](Index self) {
    const auto& g = tape.grad(self);
    const bool want_o = tape.requires_grad(oi), want_h = tape.requires_grad(hi);
    const Eigen::OuterStride<> os(steps * c);
    for (Index b = 0; b < batch; ++b) {
      for (Index t = 0; t < steps; ++t) {
        const Index op = (b * stride + offset + t) * n * n;
        const Index base = (b * n * steps + t) * c;
        const ConstStrided gt(g.data() + base, n, c, os);
        if (want_h) {
          const Eigen::Map<const RowMatrixXd> l(tape.value(oi).data() + op, n, n);
          Strided(tape.grad(hi).data() + base, n, c, os).noalias() += l.transpose() * gt;
        }
        if (want_o) {
          const ConstStrided x(tape.value(hi).data() + base, n, c, os);
          Eigen::Map<RowMatrixXd>(tape.grad(oi).data() + op, n, n).noalias() += gt * x.transpose();
        }
      }
    }
  });
}

Var sum(const Var& x) {
  Tape& tape = x.tape();
  const Index xi = x.id();
  return tape.record(Tensor::scalar(x.value().flat().sum()), {x}, [&tape, xi](Index self) {
    tape.grad(xi).flat().array() += tape.grad(self)[0];
  });
}

Var mean(const Var& x) {
  Tape& tape = x.tape();
  const Index xi = x.id();
  const double n = static_cast<double>(x.value().size());
  return tape.record(Tensor::scalar(x.value().flat().sum() / n), {x}, [&tape, xi, n](Index self) {
    tape.grad(xi).flat().array() += tape.grad(self)[0] / n;
  });
}

Var mse(const Var& prediction, const Var& target) {
  require_same_shape(prediction, target, "mse");
  Tape& tape = prediction.tape();
  const double n = static_cast<double>(prediction.value().size());
  const double loss = (prediction.value().flat() - target.value().flat()).squaredNorm() / n;
  const Index pi = prediction.id(), ti = target.id();
  return tape.record(Tensor::scalar(loss), {prediction, target}, [&tape, pi, ti, n](Index self) {
    const double g = tape.grad(self)[0];
    const VectorXd diff = tape.value(pi).flat() - tape.value(ti).flat();
    accumulate(tape, pi, (2.0 * g / n) * diff);
    if (tape.requires_grad(ti)) tape.grad(ti).flat() -= (2.0 * g / n) * diff;
  });
}

}  // namespace shadowgrid::numerics
