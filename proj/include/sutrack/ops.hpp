#pragma once

#include <vector>

#include "sutrack/tensor.hpp"

// Differentiable tensor ops. Binary elementwise ops broadcast numpy-style
// (shapes aligned on the right, size-1 axes stretch). Shape errors throw
// std::invalid_argument naming both shapes.
namespace sutrack {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor neg(const Tensor& x);

/// (M×K)·(K×N) → M×N.
Tensor matmul(const Tensor& a, const Tensor& b);
/// Swaps the two axes of a rank-2 tensor.
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor broadcast_to(const Tensor& x, const Shape& shape);
/// out.flat[i] = x.flat[index[i]]; indices may repeat (gradients add up).
Tensor gather(const Tensor& x, std::vector<std::size_t> index, Shape shape);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor pow(const Tensor& x, double exponent);
Tensor sigmoid(const Tensor& x);
/// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);

Tensor softmax(const Tensor& x);      // over the last axis
Tensor log_softmax(const Tensor& x);  // over the last axis
/// Normalizes each row of the last axis to zero mean, unit variance; no affine.
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

Tensor sum(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim = false);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim = false);
Tensor mean(const Tensor& x);

/// x·Wᵀ + b with W stored (out × in); b may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator*(const Tensor& x, double s) { return scale(x, s); }
inline Tensor operator*(double s, const Tensor& x) { return scale(x, s); }
inline Tensor operator+(const Tensor& x, double s) { return add_scalar(x, s); }
inline Tensor operator-(double s, const Tensor& x) { return add_scalar(neg(x), s); }

/// Throws if any value is NaN or infinite.
void check_finite(const Tensor& x, const char* what);

}  // namespace sutrack
