#pragma once

// Discrete 1D smoothing kernels applied to threshold maps.

#include "stdec/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace stdec {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Normalized symmetric weights over offsets -radius..radius.
/// weights(radius + u) is the weight of offset u.
template <typename Scalar = double>
struct SmoothingKernel {
  KernelKind kind = KernelKind::gaussian;
  int radius = 1;
  Scalar sigma = Scalar(1);
  Vector<Scalar> weights;

  Scalar weight(int offset) const { return weights(radius + offset); }
};

template <typename Scalar = double>
SmoothingKernel<Scalar> build_kernel(KernelKind kind, Scalar sigma, int radius) {
  if (radius < 1) throw ConfigError("kernel radius must be at least 1");
  if (kind == KernelKind::gaussian && !(sigma > Scalar(0)))
    throw ConfigError("gaussian kernel requires sigma > 0");

  SmoothingKernel<Scalar> k;
  k.kind = kind;
  k.radius = radius;
  k.sigma = sigma;
  k.weights.resize(2 * radius + 1);
  for (int u = -radius; u <= radius; ++u) {
    Scalar w = Scalar(1);
    switch (kind) {
      case KernelKind::gaussian:
        w = std::exp(-Scalar(u * u) / (Scalar(2) * sigma * sigma));
        break;
      case KernelKind::mean:
        w = Scalar(1);
        break;
      case KernelKind::triangular:
        w = Scalar(radius + 1 - std::abs(u));
        break;
    }
    k.weights(radius + u) = w;
  }
  k.weights /= k.weights.sum();
  return k;
}

namespace detail {

inline Eigen::Index boundary_index(Eigen::Index i, Eigen::Index n, BoundaryPolicy policy) {
  if (i >= 0 && i < n) return i;
  if (policy == BoundaryPolicy::replicate || n == 1) return std::clamp<Eigen::Index>(i, 0, n - 1);
  // reflect about the edge samples (d c b | a b c d | c b a), folded for
  // offsets wider than the signal
  const Eigen::Index period = 2 * (n - 1);
  Eigen::Index m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

}  // namespace detail

/// Convolves `values` with the kernel. Each output is a convex combination of
/// inputs and is clamped to [min(values), max(values)] so that rounding never
/// takes it outside the input range. Accumulating offsets from the center
/// value keeps flat regions exactly flat.
template <typename Derived>
Vector<typename Derived::Scalar> smooth(const Eigen::MatrixBase<Derived>& values,
                                        const SmoothingKernel<typename Derived::Scalar>& kernel,
                                        BoundaryPolicy boundary = BoundaryPolicy::replicate) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  if (n == 0) throw ConfigError("cannot smooth an empty array");
  if (!values.allFinite()) throw ConfigError("smoothing input must be finite");

  const Scalar lo = values.minCoeff();
  const Scalar hi = values.maxCoeff();
  Vector<Scalar> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar center = values(i);
    Scalar acc = Scalar(0);
    for (int u = -kernel.radius; u <= kernel.radius; ++u)
      if (u != 0) acc += kernel.weight(u) * (values(detail::boundary_index(i + u, n, boundary)) - center);
    out(i) = std::clamp(center + acc, lo, hi);
  }
  return out;
}

}  // namespace stdec
