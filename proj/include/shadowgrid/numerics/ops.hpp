// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "shadowgrid/numerics/tape.hpp"

namespace shadowgrid::numerics {

// Linear algebra -------------------------------------------------------------

/// [m x k] * [k x n]. dA = G B^T, dB = A^T G.
Var matmul(const Var& a, const Var& b);
/// Applies W [k x n] to the last axis of x [..., k].
Var linear(const Var& x, const Var& w);
/// Broadcast-adds b [n] over the last axis of x [..., n].
Var add_bias(const Var& x, const Var& b);

// Elementwise ----------------------------------------------------------------

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
/// log(1 + e^x), computed without overflow.
Var softplus(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
/// scale * x + shift.
Var affine(const Var& x, double scale, double shift);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// Shape ----------------------------------------------------------------------

Var reshape(const Var& x, Shape shape);
Var concat_last(std::span<const Var> parts);
Var slice_last(const Var& x, Index begin, Index count);
/// x [A, T, C] -> [A, C] at time step t.
Var select_step(const Var& x, Index t);
/// Rows of x viewed as a matrix: out[i] = x.matrix().row(indices[i]).
Var gather_rows(const Var& x, std::vector<Index> indices);

// Sequence / graph -----------------------------------------------------------

/// Valid 1-D convolution along time, independent per series:
/// x [N, T, C_in] * kernel [K, C_in, C_out] -> [N, T-K+1, C_out].
Var temporal_conv1d(const Var& x, const Var& kernel);
/// Splits the last axis into halves P | Q and returns P * sigmoid(Q).
Var glu(const Var& x);
/// out[g, rows[e], cols[e]] = values[g * E + e]; other entries zero.
/// values has G * E entries, result is [G, n, n].
Var scatter_square(const Var& values, Index groups, Index n, std::vector<Index> rows, std::vector<Index> cols);
/// Batched D^{-1/2} (A + I) D^{-1/2} over a [G, n, n] stack, D_ii = sum_j (A + I)_ij.
/// Throws NegativeWeight on negative entries.
Var normalized_adjacency(const Var& a);
/// Spatial mixing for batched windows.
/// h is [B * n, T, C] (window-major, then node); operators is [G, n, n].
/// out[b, :, t, :] = operators[b * stride + offset + t] * h[b, :, t, :].
Var spatial_mix(const Var& operators, const Var& h, Index n, Index stride, Index offset);

// Reductions -----------------------------------------------------------------

Var sum(const Var& x);
Var mean(const Var& x);
/// mean((prediction - target)^2); shapes must match.
Var mse(const Var& prediction, const Var& target);

}  // namespace shadowgrid::numerics
