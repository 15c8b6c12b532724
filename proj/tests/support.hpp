#pragma once

// Test-side generators and oracles. Nothing here calls into the fitting
// engines.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ddc/lti.hpp"
#include "ddc/plant_data.hpp"

namespace ddc::test {

inline double rel_err(cplx got, cplx want) {
  const double scale = std::abs(want);
  return scale > 0.0 ? std::abs(got - want) / scale : std::abs(got);
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    w[k] = lo * std::pow(hi / lo, f);
  }
  return w;
}

inline FrequencyDataset sample(const Evaluator& h, const std::vector<double>& omega) {
  FrequencyDataset d;
  d.omega = omega;
  for (double w : omega) d.values.push_back(h(cplx(0.0, w)));
  return d;
}

/// Direct sum of partial fractions, written out independently of the library.
inline cplx partial_fractions(const std::vector<cplx>& poles, const std::vector<cplx>& residues, double direct,
                              cplx s) {
  cplx acc = direct;
  for (std::size_t k = 0; k < poles.size(); ++k) acc += residues[k] / (s - poles[k]);
  return acc;
}

/// Random stable model of the given order with conjugate pairs adjacent,
/// poles in the band [0.05, 20] rad/s.
inline PoleResidueModel random_stable_model(std::mt19937_64& rng, std::size_t order) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, unit(rng)); };
  PoleResidueModel m;
  std::size_t left = order;
  while (left > 0) {
    if (left >= 2 && unit(rng) < 0.6) {
      const double w = logu(0.1, 10.0);
      const double re = -w * logu(0.05, 1.0);
      const cplx r(unit(rng) * 2.0 - 1.0, unit(rng) * 2.0 - 1.0);
      m.poles.push_back(cplx(re, w));
      m.poles.push_back(cplx(re, -w));
      m.residues.push_back(r);
      m.residues.push_back(std::conj(r));
      left -= 2;
    } else {
      m.poles.push_back(cplx(-logu(0.05, 20.0), 0.0));
      m.residues.push_back(cplx((unit(rng) < 0.5 ? -1.0 : 1.0) * logu(0.2, 2.0), 0.0));
      left -= 1;
    }
  }
  return m;
}

inline Evaluator model_evaluator(const PoleResidueModel& m) {
  return [m](cplx s) { return partial_fractions(m.poles, m.residues, m.direct, s); };
}

/// 1 - e^{-p t}(1 + p t): step of 1/(s/p + 1)^2.
inline double critically_damped_step(double p, double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-p * t) * (1.0 + p * t); }

}  // namespace ddc::test
