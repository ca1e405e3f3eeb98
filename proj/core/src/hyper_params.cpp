#include "l2c/hyper_params.hpp"

namespace l2c {

int ThetaLayout::add(const std::string& name, int size, bool mapped) {
  if (size <= 0) throw ConfigError("theta segment '" + name + "' must have positive size");
  if (contains(name)) throw ConfigError("duplicate theta segment '" + name + "'");
  segments_.push_back({name, size_, size, mapped});
  size_ += size;
  return segments_.back().offset;
}

const Segment& ThetaLayout::find(const std::string& name) const {
  for (const auto& s : segments_)
    if (s.name == name) return s;
  throw ConfigError("unknown theta segment '" + name + "'");
}

bool ThetaLayout::contains(const std::string& name) const {
  for (const auto& s : segments_)
    if (s.name == name) return true;
  return false;
}

bool ThetaLayout::operator==(const ThetaLayout& o) const {
  if (size_ != o.size_ || segments_.size() != o.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& a = segments_[i];
    const auto& b = o.segments_[i];
    if (a.name != b.name || a.offset != b.offset || a.size != b.size || a.mapped != b.mapped) return false;
  }
  return true;
}

Vector HyperParams::dtheta_draw() const {
  Vector d = Vector::Ones(layout.size());
  for (const auto& s : layout.segments())
    if (s.mapped) d.segment(s.offset, s.size).setConstant(w_max - w_min);
  return d;
}

Vector HyperParams::segment(const std::string& name) const {
  const auto& s = layout.find(name);
  return theta.segment(s.offset, s.size);
}

HyperParams map_theta(const Vector& raw, const ThetaLayout& layout, double w_min, double w_max) {
  if (raw.size() != layout.size()) throw ConfigError("raw vector size does not match theta layout");
  if (!(w_max > w_min)) throw ConfigError("w_max must exceed w_min");
  HyperParams hp;
  hp.layout = layout;
  hp.raw = raw;
  hp.w_min = w_min;
  hp.w_max = w_max;
  hp.theta = raw;
  for (const auto& s : layout.segments()) {
    if (!s.mapped) continue;
    for (int i = s.offset; i < s.offset + s.size; ++i) {
      if (!(raw(i) > 0.0 && raw(i) < 1.0))
        throw DomainError("raw hyperparameter " + std::to_string(i) + " in segment '" + s.name +
                          "' is outside (0,1)");
      hp.theta(i) = w_min + (w_max - w_min) * raw(i);
    }
  }
  return hp;
}

HyperParams hyper_params_from_theta(const Vector& theta, const ThetaLayout& layout, double w_min,
                                    double w_max) {
  if (theta.size() != layout.size()) throw ConfigError("theta size does not match layout");
  HyperParams hp;
  hp.layout = layout;
  hp.theta = theta;
  hp.raw = theta;
  hp.w_min = w_min;
  hp.w_max = w_max;
  for (const auto& s : layout.segments()) {
    if (!s.mapped) continue;
    for (int i = s.offset; i < s.offset + s.size; ++i) {
      if (theta(i) < w_min || theta(i) > w_max)
        throw DomainError("theta entry " + std::to_string(i) + " outside [w_min, w_max]");
      hp.raw(i) = (theta(i) - w_min) / (w_max - w_min);
    }
  }
  return hp;
}

}  // namespace l2c
