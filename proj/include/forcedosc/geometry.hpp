#pragma once

// Coordinate blocks M_i with a Riemannian metric, and the chart form of the
// covariant equation of motion  q''^k = -Gamma^k_ij p^i p^j + F^k.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forcedosc/errors.hpp"

namespace forcedosc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class BlockKind { interval, disk_like_2d, closed };

inline std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::interval:
      return "interval";
    case BlockKind::disk_like_2d:
      return "disk-like-2d";
    case BlockKind::closed:
      return "closed";
  }
  return "unknown";
}

inline BlockKind block_kind_from_string(const std::string& name) {
  if (name == "interval") return BlockKind::interval;
  if (name == "disk-like-2d" || name == "disk_like_2d") return BlockKind::disk_like_2d;
  if (name == "closed") return BlockKind::closed;
  throw ConfigError("unknown block kind '" + name + "'");
}

/// Euler characteristic of the boundary: a two-point set for an interval,
/// a circle for a disk-like 2-D block, empty for a closed block.
inline int boundary_euler_char(BlockKind kind) { return kind == BlockKind::interval ? 2 : 0; }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double span() const { return hi - lo; }
  [[nodiscard]] double center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Christoffel symbols of the second kind, Gamma^k_ij stored densely.
class Christoffel {
 public:
  explicit Christoffel(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim), 0.0) {}

  double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }
  [[nodiscard]] int dim() const { return dim_; }

 private:
  [[nodiscard]] std::size_t index(int k, int i, int j) const {
    return static_cast<std::size_t>((k * dim_ + i) * dim_ + j);
  }

  int dim_;
  std::vector<double> data_;
};

using MetricFn = std::function<Matrix(const Vector& q)>;
using ChristoffelFn = std::function<Christoffel(const Vector& q)>;

enum class FaceSide { lower, upper };

/// One coordinate-aligned face {q^k = bound} of a box block.
struct BoundaryFace {
  int coordinate = 0;
  FaceSide side = FaceSide::lower;

  [[nodiscard]] double sign() const { return side == FaceSide::upper ? 1.0 : -1.0; }
  [[nodiscard]] std::string label() const {
    return "q" + std::to_string(coordinate + 1) + (side == FaceSide::upper ? "_upper" : "_lower");
  }
};

/// Central finite-difference Christoffel symbols of a metric.
inline Christoffel finite_difference_christoffel(const MetricFn& metric, const Vector& q,
                                                 double step = 1e-5) {
  const int dim = static_cast<int>(q.size());
  std::vector<Matrix> dg(static_cast<std::size_t>(dim));  // dg[l](i, j) = d_l g_ij
  for (int l = 0; l < dim; ++l) {
    Vector plus = q;
    Vector minus = q;
    plus(l) += step;
    minus(l) -= step;
    dg[static_cast<std::size_t>(l)] = (metric(plus) - metric(minus)) / (2.0 * step);
  }
  const Matrix inverse = metric(q).inverse();
  Christoffel gamma(dim);
  for (int k = 0; k < dim; ++k) {
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        double sum = 0.0;
        for (int l = 0; l < dim; ++l) {
          const auto& di = dg[static_cast<std::size_t>(i)];
          const auto& dj = dg[static_cast<std::size_t>(j)];
          const auto& dl = dg[static_cast<std::size_t>(l)];
          sum += inverse(k, l) * (di(l, j) + dj(l, i) - dl(i, j));
        }
        gamma(k, i, j) = 0.5 * sum;
      }
    }
  }
  return gamma;
}

/// A compact coordinate box M_i inside a slightly larger open box M_i+.
class ChartBlock {
 public:
  struct Options {
    double margin_fraction = 0.1;  ///< enlargement per coordinate, relative to its span
    std::optional<ChristoffelFn> christoffel;
    std::optional<int> chi;  ///< required for closed blocks, ignored otherwise
    double christoffel_step = 1e-5;
    bool constant_metric = false;  ///< lets covariant_accel skip the connection entirely
  };

  ChartBlock(BlockKind kind, std::vector<Interval> bounds, MetricFn metric, Options options)
      : kind_(kind), bounds_(std::move(bounds)), metric_(std::move(metric)), options_(std::move(options)) {
    const auto dim = bounds_.size();
    if (dim != 1 && dim != 2) throw ConfigError("chart blocks must be 1- or 2-dimensional");
    if (kind_ == BlockKind::interval && dim != 1) throw ConfigError("interval blocks are 1-dimensional");
    if (kind_ == BlockKind::disk_like_2d && dim != 2) throw ConfigError("disk-like blocks are 2-dimensional");
    if (!(options_.margin_fraction > 0.0)) throw ConfigError("enlargement margin must be positive");
    for (const auto& b : bounds_) {
      if (!(b.hi > b.lo) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
        throw ConfigError("block bounds must be finite with lo < hi");
      }
    }
    if (kind_ == BlockKind::closed) {
      if (!options_.chi) throw ConfigError("closed blocks need a declared Euler characteristic");
      chi_ = *options_.chi;
    } else {
      chi_ = 1;
    }
    if (!metric_) throw ConfigError("block metric is required");
  }

  /// Flat 1-D interval with metric g = scale.
  static ChartBlock interval(double lo, double hi, double metric_scale = 1.0, double margin_fraction = 0.1) {
    Options options;
    options.margin_fraction = margin_fraction;
    options.constant_metric = true;
    return ChartBlock(BlockKind::interval, {{lo, hi}},
                      [metric_scale](const Vector&) { return Matrix::Constant(1, 1, metric_scale); },
                      options);
  }

  [[nodiscard]] int dim() const { return static_cast<int>(bounds_.size()); }
  [[nodiscard]] BlockKind kind() const { return kind_; }
  [[nodiscard]] int chi() const { return chi_; }
  [[nodiscard]] const std::vector<Interval>& bounds() const { return bounds_; }
  [[nodiscard]] bool has_analytic_christoffel() const { return options_.christoffel.has_value(); }
  [[nodiscard]] double margin_fraction() const { return options_.margin_fraction; }

  [[nodiscard]] Interval enlarged(int coordinate) const {
    const auto& b = bounds_[static_cast<std::size_t>(coordinate)];
    const double pad = options_.margin_fraction * b.span();
    return {b.lo - pad, b.hi + pad};
  }

  [[nodiscard]] bool contains(const Vector& q) const {
    for (int k = 0; k < dim(); ++k) {
      if (!bounds_[static_cast<std::size_t>(k)].contains(q(k))) return false;
    }
    return true;
  }

  [[nodiscard]] bool in_enlarged(const Vector& q) const {
    if (q.size() != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
      const Interval e = enlarged(k);
      if (!(q(k) > e.lo && q(k) < e.hi)) return false;
    }
    return true;
  }

  void require_enlarged(const Vector& q) const {
    if (!in_enlarged(q)) throw DomainError("coordinates outside the enlarged block");
  }

  /// Box distance from q to the boundary; negative outside the block.
  /// Closed blocks have no boundary and report +infinity.
  [[nodiscard]] double boundary_distance(const Vector& q) const {
    if (kind_ == BlockKind::closed) return std::numeric_limits<double>::infinity();
    double dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim(); ++k) {
      const auto& b = bounds_[static_cast<std::size_t>(k)];
      dist = std::min({dist, q(k) - b.lo, b.hi - q(k)});
    }
    return dist;
  }

  [[nodiscard]] Matrix metric(const Vector& q) const {
    require_enlarged(q);
    Matrix g = metric_(q);
    if (!g.allFinite()) throw NumericError("metric is not finite");
    return g;
  }

  [[nodiscard]] Christoffel christoffel(const Vector& q) const {
    require_enlarged(q);
    if (options_.christoffel) return (*options_.christoffel)(q);
    if (options_.constant_metric) return Christoffel(dim());
    return finite_difference_christoffel(metric_, q, options_.christoffel_step);
  }

  /// Finite-difference connection, regardless of whether an analytic one is set.
  [[nodiscard]] Christoffel christoffel_fd(const Vector& q) const {
    require_enlarged(q);
    return finite_difference_christoffel(metric_, q, options_.christoffel_step);
  }

  [[nodiscard]] std::vector<BoundaryFace> faces() const {
    std::vector<BoundaryFace> out;
    if (kind_ == BlockKind::closed) return out;
    for (int k = 0; k < dim(); ++k) {
      out.push_back({k, FaceSide::lower});
      out.push_back({k, FaceSide::upper});
    }
    return out;
  }

  [[nodiscard]] double face_value(const BoundaryFace& face) const {
    const auto& b = bounds_[static_cast<std::size_t>(face.coordinate)];
    return face.side == FaceSide::upper ? b.hi : b.lo;
  }

  /// Metric-unit outward normal: the raised coordinate differential, g^{-1} e_k,
  /// scaled to unit length and oriented away from the block.
  [[nodiscard]] Vector outward_normal(const BoundaryFace& face, const Vector& q) const {
    const Matrix inverse = metric(q).inverse();
    Vector nu = inverse.col(face.coordinate) * face.sign();
    return nu / std::sqrt(inverse(face.coordinate, face.coordinate));
  }

 private:
  BlockKind kind_;
  std::vector<Interval> bounds_;
  MetricFn metric_;
  Options options_;
  int chi_ = 1;
};

/// Position and velocity on one block.
struct TangentState {
  Vector q;
  Vector p;
};

inline double metric_inner(const ChartBlock& block, const Vector& q, const Vector& u, const Vector& v) {
  const Matrix g = block.metric(q);
  return u.dot(g * v);
}

inline double kinetic_energy(const ChartBlock& block, const Vector& q, const Vector& p) {
  return metric_inner(block, q, p, p);
}

/// Chart acceleration  a^k = -Gamma^k_ij p^i p^j + F^k.
inline Vector covariant_accel(const ChartBlock& block, const Vector& q, const Vector& p, const Vector& force) {
  block.require_enlarged(q);
  Vector accel = force;
  const Christoffel gamma = block.christoffel(q);
  for (int k = 0; k < block.dim(); ++k) {
    double sum = 0.0;
    for (int i = 0; i < block.dim(); ++i) {
      for (int j = 0; j < block.dim(); ++j) sum += gamma(k, i, j) * p(i) * p(j);
    }
    accel(k) -= sum;
  }
  if (!accel.allFinite()) throw NumericError("covariant acceleration is not finite");
  return accel;
}

}  // namespace forcedosc
