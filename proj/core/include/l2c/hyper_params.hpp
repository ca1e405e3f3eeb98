#pragma once

#include "l2c/types.hpp"

#include <string>
#include <vector>

namespace l2c {

struct Segment {
  std::string name;
  int offset = 0;
  int size = 0;
  bool mapped = true;  // theta = w_min + (w_max - w_min) * raw on this segment
};

/// Named, contiguous segments of the flat hyperparameter vector.
class ThetaLayout {
 public:
  int add(const std::string& name, int size, bool mapped = true);
  const Segment& find(const std::string& name) const;
  bool contains(const std::string& name) const;
  int offset(const std::string& name) const { return find(name).offset; }
  int size() const { return size_; }
  const std::vector<Segment>& segments() const { return segments_; }
  bool operator==(const ThetaLayout& o) const;

 private:
  std::vector<Segment> segments_;
  int size_ = 0;
};

struct HyperParams {
  ThetaLayout layout;
  Vector theta;
  Vector raw;
  double w_min = 0.01;
  double w_max = 1000.0;

  /// Diagonal of dtheta/draw: (w_max - w_min) on mapped entries, 1 elsewhere.
  Vector dtheta_draw() const;
  Vector segment(const std::string& name) const;
};

constexpr double kWMin = 0.01;
constexpr double kWMax = 1000.0;

/// Throws DomainError when a mapped raw entry is outside (0, 1).
HyperParams map_theta(const Vector& raw, const ThetaLayout& layout, double w_min = kWMin,
                      double w_max = kWMax);

/// Wrap an explicit theta; raw is back-computed on mapped segments.
HyperParams hyper_params_from_theta(const Vector& theta, const ThetaLayout& layout,
                                    double w_min = kWMin, double w_max = kWMax);

}  // namespace l2c
