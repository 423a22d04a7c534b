#pragma once

// Tabulated log potential of a unit-width, unit-mass radial bump,
//   Phi(z) = int log d(z, s) phi(|s|) ds / N,
// which depends on z only through (sqrt(x^2+y^2), |t|) because rotations about
// the t axis and (x,y,t) -> (x,-y,-t) are gauge-preserving automorphisms fixing
// the bump. Inside gauge 3 we interpolate Phi on a grid in (r, sqrt|t|); outside
// we interpolate Phi - log|z| on a grid in (3/|z|, polar angle). Both grids are
// filled once, on first use, by the annular quadrature of quadrature.cpp.

#include <array>
#include <vector>

#include "heislab/density.hpp"
#include "heislab/heisenberg.hpp"

namespace heislab::detail {

struct KernelSample {
  double value = 0.0;
  std::array<double, 3> grad{0.0, 0.0, 0.0};
};

// Catmull-Rom bicubic interpolant on a uniform grid with one ghost layer.
class BicubicGrid {
 public:
  enum class Edge { even, extrapolate };

  BicubicGrid() = default;
  BicubicGrid(int nu, double u0, double u1, int nv, double v0, double v1);

  int nu() const { return nu_; }
  int nv() const { return nv_; }
  double u_at(int i) const { return u0_ + hu_ * i; }
  double v_at(int j) const { return v0_ + hv_ * j; }
  void set(int i, int j, double value) { data_[index(i, j)] = value; }
  void finalize(Edge u_low, Edge u_high, Edge v_low, Edge v_high);

  // value, d/du, d/dv
  std::array<double, 3> eval(double u, double v) const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i + 1) * static_cast<std::size_t>(nv_ + 2) +
           static_cast<std::size_t>(j + 1);
  }
  double& at(int i, int j) { return data_[index(i, j)]; }
  double at(int i, int j) const { return data_[index(i, j)]; }

  int nu_ = 0, nv_ = 0;
  double u0_ = 0, hu_ = 1, v0_ = 0, hv_ = 1;
  std::vector<double> data_;
};

class LogKernelTable {
 public:
  static constexpr double kNearRadius = 3.0;

  static const LogKernelTable& get(Profile profile);

  KernelSample eval(const Point& z) const;

  explicit LogKernelTable(Profile profile);

 private:
  BicubicGrid near_;  // Phi over (r, sqrt|t|) in [0,3]^2
  BicubicGrid far_;   // Phi - log|z| over (3/|z|, psi) in [0,1] x [0, pi/2]
};

}  // namespace heislab::detail
