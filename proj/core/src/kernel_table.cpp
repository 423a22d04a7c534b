#include "kernel_table.hpp"

#include <algorithm>
#include <cmath>

#include "heislab/quadrature.hpp"

namespace heislab::detail {

BicubicGrid::BicubicGrid(int nu, double u0, double u1, int nv, double v0, double v1)
    : nu_(nu),
      nv_(nv),
      u0_(u0),
      hu_((u1 - u0) / (nu - 1)),
      v0_(v0),
      hv_((v1 - v0) / (nv - 1)),
      data_(static_cast<std::size_t>(nu + 2) * static_cast<std::size_t>(nv + 2), 0.0) {}

void BicubicGrid::finalize(Edge u_low, Edge u_high, Edge v_low, Edge v_high) {
  auto ghost = [](Edge e, double a1, double a2, double a3) {
    // a1 is the boundary node, a2 and a3 its interior neighbours.
    return e == Edge::even ? a2 : 3.0 * a1 - 3.0 * a2 + a3;
  };
  for (int j = 0; j < nv_; ++j) {
    at(-1, j) = ghost(u_low, at(0, j), at(1, j), at(2, j));
    at(nu_, j) = ghost(u_high, at(nu_ - 1, j), at(nu_ - 2, j), at(nu_ - 3, j));
  }
  for (int i = -1; i <= nu_; ++i) {
    at(i, -1) = ghost(v_low, at(i, 0), at(i, 1), at(i, 2));
    at(i, nv_) = ghost(v_high, at(i, nv_ - 1), at(i, nv_ - 2), at(i, nv_ - 3));
  }
}

namespace {

// Catmull-Rom weights and their derivatives at fractional offset s.
void catmull_rom(double s, double w[4], double dw[4]) {
  const double s2 = s * s, s3 = s2 * s;
  w[0] = 0.5 * (-s + 2.0 * s2 - s3);
  w[1] = 0.5 * (2.0 - 5.0 * s2 + 3.0 * s3);
  w[2] = 0.5 * (s + 4.0 * s2 - 3.0 * s3);
  w[3] = 0.5 * (-s2 + s3);
  dw[0] = 0.5 * (-1.0 + 4.0 * s - 3.0 * s2);
  dw[1] = 0.5 * (-10.0 * s + 9.0 * s2);
  dw[2] = 0.5 * (1.0 + 8.0 * s - 9.0 * s2);
  dw[3] = 0.5 * (-2.0 * s + 3.0 * s2);
}

}  // namespace

std::array<double, 3> BicubicGrid::eval(double u, double v) const {
  const double fu = (u - u0_) / hu_;
  const double fv = (v - v0_) / hv_;
  const int i = std::clamp(static_cast<int>(std::floor(fu)), 0, nu_ - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fv)), 0, nv_ - 2);
  double wu[4], dwu[4], wv[4], dwv[4];
  catmull_rom(fu - i, wu, dwu);
  catmull_rom(fv - j, wv, dwv);
  double val = 0.0, du = 0.0, dv = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0, drow = 0.0;
    for (int b = 0; b < 4; ++b) {
      const double g = at(i - 1 + a, j - 1 + b);
      row += wv[b] * g;
      drow += dwv[b] * g;
    }
    val += wu[a] * row;
    du += dwu[a] * row;
    dv += wu[a] * drow;
  }
  return {val, du / hu_, dv / hv_};
}

namespace {

constexpr int kNearNodes = 49;
constexpr int kFarNodes = 33;
constexpr int kAngular = 24;

double phi_at(const Bump& unit, const Point& z) {
  // bump_log_moment integrates log(1/d); Phi integrates log d.
  return -bump_log_moment(unit, z, kAngular);
}

}  // namespace

LogKernelTable::LogKernelTable(Profile profile)
    : near_(kNearNodes, 0.0, kNearRadius, kNearNodes, 0.0, kNearRadius),
      far_(kFarNodes, 0.0, 1.0, kFarNodes, 0.0, 0.5 * kPi) {
  const Bump unit{kIdentity, profile, 1.0, 1.0};
  for (int i = 0; i < kNearNodes; ++i) {
    for (int j = 0; j < kNearNodes; ++j) {
      const double tau = near_.v_at(j);
      near_.set(i, j, phi_at(unit, Point{near_.u_at(i), 0.0, tau * tau}));
    }
  }
  near_.finalize(BicubicGrid::Edge::even, BicubicGrid::Edge::extrapolate,
                 BicubicGrid::Edge::even, BicubicGrid::Edge::extrapolate);

  for (int i = 0; i < kFarNodes; ++i) {
    const double xi = far_.u_at(i);
    for (int j = 0; j < kFarNodes; ++j) {
      if (i == 0) {
        far_.set(i, j, 0.0);
        continue;
      }
      const double rho = kNearRadius / xi;
      const Point z = polar_point(rho, far_.v_at(j), 0.0);
      far_.set(i, j, phi_at(unit, z) - std::log(rho));
    }
  }
  far_.finalize(BicubicGrid::Edge::extrapolate, BicubicGrid::Edge::extrapolate,
                BicubicGrid::Edge::even, BicubicGrid::Edge::extrapolate);
}

const LogKernelTable& LogKernelTable::get(Profile profile) {
  switch (profile) {
    case Profile::poly_bump: {
      static const LogKernelTable table(Profile::poly_bump);
      return table;
    }
    case Profile::gaussian_like: {
      static const LogKernelTable table(Profile::gaussian_like);
      return table;
    }
  }
  static const LogKernelTable fallback(Profile::poly_bump);
  return fallback;
}

KernelSample LogKernelTable::eval(const Point& z) const {
  constexpr double kTiny = 1e-12;
  const double h = z.x * z.x + z.y * z.y;
  const double abs_t = std::abs(z.t);
  const double sign_t = z.t < 0.0 ? -1.0 : 1.0;
  const double g4 = h * h + abs_t * abs_t;
  const double rho = std::sqrt(std::sqrt(g4));
  KernelSample out;
  if (rho <= kNearRadius) {
    const double r = std::sqrt(h);
    const double tau = std::sqrt(abs_t);
    const auto [v, dr, dtau] = near_.eval(r, tau);
    out.value = v;
    const double dr_over_r = r > kTiny ? dr / r : 0.0;
    out.grad = {dr_over_r * z.x, dr_over_r * z.y, tau > kTiny ? sign_t * dtau / (2.0 * tau) : 0.0};
    return out;
  }
  const double xi = kNearRadius / rho;
  const double psi = std::atan2(abs_t, h);
  const auto [v, dxi, dpsi] = far_.eval(xi, psi);
  out.value = std::log(rho) + v;
  const double dphi_drho = 1.0 / rho - kNearRadius * dxi / (rho * rho);
  const double rho3 = rho * rho * rho;
  const double dphi_dh = dphi_drho * h / (2.0 * rho3) - dpsi * abs_t / g4;
  const double dphi_dT = dphi_drho * abs_t / (2.0 * rho3) + dpsi * h / g4;
  out.grad = {2.0 * z.x * dphi_dh, 2.0 * z.y * dphi_dh, sign_t * dphi_dT};
  return out;
}

}  // namespace heislab::detail
