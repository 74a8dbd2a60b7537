#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "memsim/grid.hpp"
#include "memsim/transport.hpp"

namespace memsim {

struct RectValue {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  double value = 0.0;
};

/// Constant background overridden by axis-aligned rectangles (later ones win).
/// A cell takes a rectangle's value when its center lies inside it.
struct PiecewiseField {
  double background = 0.0;
  std::vector<RectValue> rects;

  CellField sample(const Mesh& mesh) const;
  double min_value() const;
  double max_abs() const;
};

struct DeviceConfig {
  DomainSpec domain = DomainSpec::unit_square();
  int nx = 32;
  int ny = 32;
  double lambda2 = 1.0;
  double intrinsic = 1.0;
  PiecewiseField doping;
  Eigen::Vector2d n_bar{1.0, 1.0};  // per terminal
  Eigen::Vector2d p_bar{1.0, 1.0};
  PiecewiseField n0{1.0, {}};
  PiecewiseField p0{1.0, {}};
  PiecewiseField D0{1.0, {}};
  Truncation truncation;
  double gummel_tol = 1e-8;
  int gummel_max_iter = 50;

  void validate() const;
};

/// Sections [domain], [doping], [boundary], [initial], [solver] with
/// `key = value` lines; '#' starts a comment. Throws ParseError or ConfigError.
DeviceConfig parse_device_config(std::string_view text);

DeviceConfig read_device_config(const std::string& path);

}  // namespace memsim
