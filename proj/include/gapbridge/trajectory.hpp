#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gapbridge/error.hpp"

namespace gapbridge {

/// Regular 1D or 2D grid. Points are stored row-major: index = iy * nx + ix.
struct Grid {
  std::size_t dims = 1;
  std::vector<std::size_t> shape;  // points per axis (x first)
  std::vector<double> spacing;
  std::vector<double> origin;

  static Grid line(std::size_t nx, double dx, double x0 = 0.0) {
    return Grid{1, {nx}, {dx}, {x0}};
  }
  static Grid plane(std::size_t nx, std::size_t ny, double dx, double dy,
                    double x0 = 0.0, double y0 = 0.0) {
    return Grid{2, {nx, ny}, {dx, dy}, {x0, y0}};
  }

  std::size_t point_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }
  std::size_t nx() const { return shape[0]; }
  std::size_t ny() const { return dims > 1 ? shape[1] : 1; }

  std::size_t index(std::size_t ix, std::size_t iy = 0) const {
    return iy * nx() + ix;
  }
  double coord(std::size_t axis, std::size_t i) const {
    return origin[axis] + spacing[axis] * static_cast<double>(i);
  }

  void validate() const {
    if (dims != 1 && dims != 2) throw ShapeError("grid: dims must be 1 or 2");
    if (shape.size() != dims || spacing.size() != dims || origin.size() != dims)
      throw ShapeError("grid: shape/spacing/origin length must equal dims");
    for (std::size_t a = 0; a < dims; ++a) {
      if (shape[a] < 3) throw ShapeError("grid: every axis needs at least 3 points");
      if (!(spacing[a] > 0.0)) throw ShapeError("grid: spacing must be positive");
    }
  }

  bool operator==(const Grid&) const = default;
};

/// Time-ordered frames of an m-component field on a Grid.
/// Layout: values[(frame * point_count + point) * m + component].
/// Frame f sits at time f * dt.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Grid grid, double dt, std::size_t components,
             std::vector<std::string> names = {}, std::string system = "")
      : grid_(std::move(grid)),
        dt_(dt),
        m_(components),
        names_(std::move(names)),
        system_(std::move(system)) {
    if (names_.empty())
      for (std::size_t c = 0; c < m_; ++c) names_.push_back("c" + std::to_string(c));
  }

  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }
  std::size_t components() const { return m_; }
  std::size_t frame_count() const { return frames_; }
  std::size_t frame_size() const { return grid_.point_count() * m_; }
  const std::vector<std::string>& component_names() const { return names_; }
  const std::string& system() const { return system_; }
  void set_system(std::string s) { system_ = std::move(s); }
  double time(std::size_t frame) const { return static_cast<double>(frame) * dt_; }

  void push_frame(std::span<const double> frame) {
    if (frame.size() != frame_size())
      throw ShapeError("trajectory: frame has " + std::to_string(frame.size()) +
                       " values, expected " + std::to_string(frame_size()));
    values_.insert(values_.end(), frame.begin(), frame.end());
    ++frames_;
  }

  std::span<const double> frame(std::size_t f) const {
    return {values_.data() + f * frame_size(), frame_size()};
  }
  std::span<double> frame(std::size_t f) {
    return {values_.data() + f * frame_size(), frame_size()};
  }
  double at(std::size_t f, std::size_t point, std::size_t c = 0) const {
    return values_[(f * grid_.point_count() + point) * m_ + c];
  }
  double& at(std::size_t f, std::size_t point, std::size_t c = 0) {
    return values_[(f * grid_.point_count() + point) * m_ + c];
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  // Replaces the payload; size must be a whole number of frames.
  void assign(std::vector<double> values) {
    if (frame_size() == 0 || values.size() % frame_size() != 0)
      throw ShapeError("trajectory: payload is not a whole number of frames");
    frames_ = values.size() / frame_size();
    values_ = std::move(values);
  }

  /// Frames [first, last) as a new trajectory sharing grid and dt.
  Trajectory slice(std::size_t first, std::size_t last) const {
    if (first > last || last > frames_) throw ShapeError("trajectory: slice out of range");
    Trajectory out(grid_, dt_, m_, names_, system_);
    out.values_.assign(values_.begin() + first * frame_size(),
                       values_.begin() + last * frame_size());
    out.frames_ = last - first;
    return out;
  }

  void validate() const {
    grid_.validate();
    if (m_ == 0) throw ShapeError("trajectory: component count must be >= 1");
    if (frames_ == 0) throw ShapeError("trajectory: needs at least one frame");
    if (!(dt_ > 0.0)) throw ShapeError("trajectory: dt must be positive");
    if (values_.size() != frames_ * frame_size())
      throw ShapeError("trajectory: payload size disagrees with frame count");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw NumericError("trajectory: non-finite value at frame " +
                           std::to_string(i / frame_size()) + ", offset " +
                           std::to_string(i % frame_size()));
  }

  bool same_layout(const Trajectory& o) const {
    return grid_ == o.grid_ && dt_ == o.dt_ && frames_ == o.frames_;
  }

 private:
  Grid grid_;
  double dt_ = 1.0;
  std::size_t m_ = 1;
  std::size_t frames_ = 0;
  std::vector<std::string> names_;
  std::string system_;
  std::vector<double> values_;
};

}  // namespace gapbridge
