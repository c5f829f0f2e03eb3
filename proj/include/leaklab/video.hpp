#pragma once

#include <Eigen/Dense>

namespace leaklab {

/// A video is an N x d matrix: one row per frame, one column per coordinate.
using Video = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-major flattening, frame by frame. Matches the CSV row layout.
inline Vector flatten(const Video& v) {
  Vector out(v.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) out(k++) = v(i, j);
  return out;
}

inline Video unflatten(const Vector& flat, Eigen::Index frames, Eigen::Index dim) {
  Video out(frames, dim);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < frames; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = flat(k++);
  return out;
}

/// Repeats a single frame across all N frames.
inline Video broadcast_frame(const Vector& frame, Eigen::Index frames) {
  return frame.transpose().replicate(frames, 1);
}

inline bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace leaklab
