#pragma once

#include <stdexcept>
#include <string>

#include "kflow/torus_geometry.hpp"

namespace kflow {

/// MAF1: d phi/dt = log(det(omega_t + H phi) / Omega).
/// MAF2: the same right-hand side minus phi.
enum class FlowKind { kMaf1, kMaf2 };

std::string to_string(FlowKind kind);
FlowKind flow_kind_from_string(const std::string& s);

/// A point on a flow trajectory together with its cached derivative data.
struct FlowState {
  double t = 0.0;
  ScalarField phi;
  /// Flow right-hand side at (t, phi).
  ScalarField phidot;
  /// omega_t + H phi.
  HermitianField metric;
  /// det(metric), cached alongside the metric.
  ScalarField density;
  long step_count = 0;
};

/// Raised when a metric or density leaves the positive cone.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(const std::string& what, double min_value)
      : std::runtime_error(what), min_value_(min_value) {}
  double min_value() const { return min_value_; }

 private:
  double min_value_;
};

}  // namespace kflow
