#pragma once

// Frequency-domain time and Bode responses for arbitrary (possibly
// irrational) transfer functions given only as evaluators.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "ddc/errors.hpp"
#include "ddc/lti.hpp"

namespace ddc {

/// Sine integral Si(x) = int_0^x sin(t)/t dt.
inline double sine_integral(double x) {
  if (x < 0) return -sine_integral(-x);
  if (x <= 20.0) {
    // Power series; worst-case cancellation at x = 20 costs ~7 digits.
    double term = x;
    double sum = x;
    const double x2 = x * x;
    for (int k = 1; k < 200; ++k) {
      term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
      const double add = term / (2.0 * k + 1.0);
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  // Asymptotic auxiliary functions f, g; truncate at the smallest term.
  const double inv2 = 1.0 / (x * x);
  double f = 1.0;
  double g = 1.0;
  double tf = 1.0;
  double tg = 1.0;
  for (int k = 1; k < 20; ++k) {
    const double nf = tf * -(2.0 * k - 1.0) * (2.0 * k) * inv2;
    const double ng = tg * -(2.0 * k) * (2.0 * k + 1.0) * inv2;
    if (std::abs(nf) > std::abs(tf)) break;
    tf = nf;
    tg = ng;
    f += tf;
    g += tg;
  }
  f /= x;
  g *= inv2;
  return std::numbers::pi / 2.0 - f * std::cos(x) - g * std::sin(x);
}

/// Frequency grid used by step_response. Log-spaced on
/// [omega_max * min_ratio, omega_max] with `points` samples.
struct StepGrid {
  std::size_t points = std::size_t{1} << 14;
  double omega_max = 1e4;
  double min_ratio = 1e-9;

  /// Default extent: 100x the highest data frequency.
  static StepGrid for_data(double highest_omega) {
    StepGrid g;
    g.omega_max = 100.0 * highest_omega;
    return g;
  }
};

namespace detail {

// int_0^1 e^{i th x} dx and int_0^1 x e^{i th x} dx.
inline void filon_moments(double th, cplx& m0, cplx& m1) {
  if (std::abs(th) < 0.05) {
    // Taylor series: sum (i th)^k / (k! (k+1)) and sum (i th)^k / (k! (k+2)).
    double re0 = 0.0, im0 = 0.0, re1 = 0.0, im1 = 0.0;
    double p = 1.0;
    for (int k = 0; k < 10; ++k) {
      if (k > 0) p *= th / k;
      const double sgn = (k / 2) % 2 == 0 ? 1.0 : -1.0;
      if (k % 2 == 0) {
        re0 += sgn * p / (k + 1);
        re1 += sgn * p / (k + 2);
      } else {
        im0 += sgn * p / (k + 1);
        im1 += sgn * p / (k + 2);
      }
    }
    m0 = cplx(re0, im0);
    m1 = cplx(re1, im1);
    return;
  }
  const cplx ith(0.0, th);
  const cplx e(std::cos(th), std::sin(th));
  m0 = (e - 1.0) / ith;
  m1 = e / ith + (e - 1.0) / (th * th);
}

}  // namespace detail

/// Unit-step response of T by inverse Fourier synthesis.
///
/// y(t) = T(0) u(t) + (1/pi) Re int_0^inf G(iw) e^{iwt} dw with
/// G(iw) = (T(iw) - T(0)) / (iw). The integral uses piecewise-linear
/// interpolation of G with exact oscillatory moments on the log grid, a
/// constant head piece on [0, w_min], and the analytic tail of -T(0)/(iw)
/// beyond w_max. u(0) = 1/2.
inline std::vector<double> step_response(const Evaluator& T, std::span<const double> t_grid,
                                         const StepGrid& grid = {}) {
  require(grid.points >= 2 && grid.omega_max > 0 && grid.min_ratio > 0 && grid.min_ratio < 1,
          "step_response: invalid frequency grid");
  const std::size_t n = grid.points;
  const double w_lo = grid.omega_max * grid.min_ratio;

  std::vector<double> w(n);
  const double lr = std::log(grid.min_ratio);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = grid.omega_max * std::exp(lr * (1.0 - static_cast<double>(k) / static_cast<double>(n - 1)));
  }
  w.front() = w_lo;
  w.back() = grid.omega_max;

  double dc = 0.0;
  {
    bool have = false;
    try {
      const cplx v = T(cplx(0.0));
      if (std::isfinite(v.real())) {
        dc = v.real();
        have = true;
      }
    } catch (const Error&) {
    }
    if (!have) dc = T(cplx(0.0, w_lo)).real();
  }

  std::vector<cplx> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx s(0.0, w[k]);
    g[k] = (T(s) - dc) / s;
  }

  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    cplx acc;
    {
      cplx m0, m1;
      detail::filon_moments(w_lo * t, m0, m1);
      acc = g[0] * w_lo * m0;
    }
    cplx e_k(std::cos(w[0] * t), std::sin(w[0] * t));
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double h = w[k + 1] - w[k];
      const double th = h * t;
      const cplx e_next(std::cos(w[k + 1] * t), std::sin(w[k + 1] * t));
      const cplx dg = g[k + 1] - g[k];
      if (std::abs(th) < 0.05) {
        cplx m0, m1;
        detail::filon_moments(th, m0, m1);
        acc += e_k * h * (g[k] * m0 + dg * m1);
      } else {
        // e_k * moments, expanded so each node needs a single sincos.
        const cplx ith(0.0, th);
        const cplx diff = e_next - e_k;
        acc += h * (g[k] * diff / ith + dg * (e_next / ith + diff / (th * th)));
      }
      e_k = e_next;
    }
    const double sign = t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
    const double tail =
        -dc / std::numbers::pi * sign * (std::numbers::pi / 2.0 - sine_integral(grid.omega_max * std::abs(t)));
    const double step = t > 0 ? dc : (t < 0 ? 0.0 : 0.5 * dc);
    out.push_back(step + acc.real() / std::numbers::pi + tail);
  }
  return out;
}

struct BodePoint {
  double omega;
  double gain_db;
  double phase_deg;
  cplx value;
};

/// Gain in dB and phase (unwrapped along the grid) of H(i w).
inline std::vector<BodePoint> bode_grid(const Evaluator& H, std::span<const double> omegas) {
  std::vector<BodePoint> out;
  out.reserve(omegas.size());
  double prev_raw = 0.0;
  double offset = 0.0;
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    require(omegas[k] > 0.0, "bode_grid: frequencies must be positive");
    require(k == 0 || omegas[k] > omegas[k - 1], "bode_grid: frequencies must increase");
    const cplx v = H(cplx(0.0, omegas[k]));
    const double raw = std::arg(v);
    if (k > 0) {
      const double d = raw - prev_raw;
      // Wrap the increment into [-pi, pi); an exact +pi jump stays +pi.
      double wrapped = std::fmod(d + std::numbers::pi, 2.0 * std::numbers::pi);
      if (wrapped < 0) wrapped += 2.0 * std::numbers::pi;
      wrapped -= std::numbers::pi;
      if (wrapped == -std::numbers::pi && d > 0) wrapped = std::numbers::pi;
      offset += wrapped - d;
    }
    prev_raw = raw;
    out.push_back({omegas[k], 20.0 * std::log10(std::abs(v)), (raw + offset) * 180.0 / std::numbers::pi, v});
  }
  return out;
}

}  // namespace ddc
