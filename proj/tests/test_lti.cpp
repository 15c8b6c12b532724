#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ddc/aaa.hpp"
#include "ddc/lti.hpp"
#include "ddc/response.hpp"
#include "support.hpp"

using namespace ddc;
using ddc::test::rel_err;

namespace {

DescriptorRealization academic() {
  DescriptorRealization m;
  m.E = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.A = Eigen::MatrixXd::Constant(1, 1, -1.0);
  m.B = Eigen::MatrixXd::Constant(1, 1, 0.5);
  m.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.D = Eigen::MatrixXd::Zero(1, 1);
  return m;
}

DescriptorRealization diagonal(std::vector<double> poles) {
  const auto n = static_cast<Eigen::Index>(poles.size());
  DescriptorRealization m;
  m.E = Eigen::MatrixXd::Identity(n, n);
  m.A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m.A(k, k) = poles[static_cast<std::size_t>(k)];
  m.B = Eigen::MatrixXd::Ones(n, 1);
  m.C = Eigen::MatrixXd::Ones(1, n);
  m.D = Eigen::MatrixXd::Zero(1, 1);
  return m;
}

cplx random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  return {u(rng), u(rng)};
}

}  // namespace

TEST(EvalDescriptor, AcademicDcGain) { EXPECT_NEAR(eval_descriptor(academic(), 0.0).real(), 0.5, 1e-15); }

TEST(EvalDescriptor, RollOff) {
  const double w = 1e6;
  EXPECT_LE(std::abs(eval_descriptor(academic(), cplx(0.0, w))), 0.5 / w * (1.0 + 1e-12));
}

TEST(EvalDescriptor, FeedthroughOnly) {
  DescriptorRealization m;
  m.E = Eigen::MatrixXd::Identity(2, 2);
  m.A = -Eigen::MatrixXd::Identity(2, 2);
  m.B = Eigen::MatrixXd::Zero(2, 1);
  m.C = Eigen::MatrixXd::Zero(1, 2);
  m.D = Eigen::MatrixXd::Constant(1, 1, 3.25);
  for (cplx s : {cplx(0.0), cplx(1.0, 2.0), cplx(-7.0, 0.1)}) EXPECT_EQ(eval_descriptor(m, s), cplx(3.25));
}

TEST(EvalDescriptor, AtPoleCarriesPoint) {
  try {
    eval_descriptor(academic(), cplx(-1.0));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::evaluation_at_pole);
    ASSERT_TRUE(e.point().has_value());
    EXPECT_EQ(*e.point(), cplx(-1.0));
  }
}

TEST(EvalDescriptor, InconsistentDimensionsRejected) {
  auto m = academic();
  m.B = Eigen::MatrixXd::Ones(2, 1);
  EXPECT_THROW(eval_descriptor(m, 1.0), Error);
}

TEST(EvalBarycentric, SinglePoint) {
  const BarycentricModel m{{0.0}, {1.0}, {1.0}};
  EXPECT_NEAR(std::abs(eval_barycentric(m, 1.0) - 0.5), 0.0, 1e-15);
}

TEST(EvalBarycentric, ExactAtSupportPoints) {
  const BarycentricModel m{{cplx(0, 1), cplx(0, -1), cplx(0, 3), cplx(0, -3)},
                           {cplx(1, 2), cplx(1, -2), cplx(-0.5, 0.25), cplx(-0.5, -0.25)},
                           {cplx(0.3, 0.1), cplx(0.3, -0.1), cplx(2, 1), cplx(2, -1)}};
  for (std::size_t j = 0; j < m.support.size(); ++j) EXPECT_EQ(eval_barycentric(m, m.support[j]), m.values[j]);
}

TEST(EvalBarycentric, VanishesAtInfinity) {
  const BarycentricModel m{{cplx(0, 1), cplx(0, -1)}, {cplx(2, 1), cplx(2, -1)}, {cplx(1, 1), cplx(1, -1)}};
  EXPECT_LT(std::abs(eval_barycentric(m, cplx(1e9, 1e9))), 1e-8);
}

TEST(EvalPoleResidue, Examples) {
  EXPECT_NEAR(std::abs(eval_pole_residue({{-1.0}, {0.5}, 0.0}, 0.0) - 0.5), 0.0, 1e-15);
  EXPECT_EQ(eval_pole_residue({{}, {}, 2.5}, cplx(3, 4)), cplx(2.5));
  const PoleResidueModel pair{{cplx(0, 1), cplx(0, -1)}, {cplx(0, -0.5), cplx(0, 0.5)}, 0.0};
  const cplx v = eval_pole_residue(pair, 0.0);
  EXPECT_NEAR(v.real(), 1.0, 1e-15);
  EXPECT_EQ(v.imag(), 0.0);
}

TEST(EvalPoleResidue, AtPoleThrows) {
  try {
    eval_pole_residue({{-1.0}, {0.5}, 0.0}, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::evaluation_at_pole);
  }
}

TEST(PolesOf, Academic) {
  const auto p = poles_of(academic());
  ASSERT_EQ(p.finite.size(), 1u);
  EXPECT_NEAR(std::abs(p.finite[0] + 1.0), 0.0, 1e-14);
  EXPECT_EQ(p.infinite, 0u);
}

TEST(PolesOf, Diagonal) {
  auto p = poles_of(diagonal({-1.0, -2.0})).finite;
  std::sort(p.begin(), p.end(), [](cplx a, cplx b) { return a.real() > b.real(); });
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(std::abs(p[0] + 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(p[1] + 2.0), 0.0, 1e-14);
}

TEST(PolesOf, InfiniteEigenvaluesCounted) {
  // E = diag(1, 0): one finite pole and one infinite eigenvalue.
  auto m = diagonal({-3.0, 1.0});
  m.E(1, 1) = 0.0;
  const auto p = poles_of(m);
  ASSERT_EQ(p.finite.size(), 1u);
  EXPECT_NEAR(std::abs(p.finite[0] + 3.0), 0.0, 1e-12);
  EXPECT_EQ(p.infinite, 1u);
}

TEST(PolesOf, DegeneratePencil) {
  auto m = diagonal({0.0, 0.0});
  m.E(1, 1) = 0.0;
  try {
    poles_of(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_pencil);
  }
}

TEST(Realify, RealDataIsIdentity) {
  ComplexDescriptor c;
  c.E = Eigen::MatrixXcd::Identity(2, 2);
  c.A = Eigen::MatrixXcd::Zero(2, 2);
  c.A(0, 0) = -1.0;
  c.A(1, 1) = -2.0;
  c.A(0, 1) = 0.5;
  c.B = Eigen::MatrixXcd::Ones(2, 1);
  c.C = Eigen::MatrixXcd::Ones(1, 2);
  c.D = Eigen::MatrixXcd::Zero(1, 1);
  const std::vector<cplx> pts{1.0, 2.0};
  const auto r = realify(c, pts, pts);
  EXPECT_TRUE(r.A.isApprox(c.A.real()));
  EXPECT_TRUE(r.E.isApprox(c.E.real()));
  EXPECT_TRUE(r.B.isApprox(c.B.real()));
}

TEST(Realify, UnpairedPointRejected) {
  ComplexDescriptor c;
  c.E = Eigen::MatrixXcd::Identity(1, 1);
  c.A = Eigen::MatrixXcd::Constant(1, 1, cplx(0, 1));
  c.B = Eigen::MatrixXcd::Ones(1, 1);
  c.C = Eigen::MatrixXcd::Ones(1, 1);
  c.D = Eigen::MatrixXcd::Zero(1, 1);
  const std::vector<cplx> pts{cplx(0, 1)};
  try {
    realify(c, pts, pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::cannot_realify);
  }
}

TEST(Realify, ConjugatePairPreservesResponse) {
  // Diagonal complex system with a conjugate pole pair and conjugate gains.
  ComplexDescriptor c;
  const std::vector<cplx> poles{cplx(-0.5, 2.0), cplx(-0.5, -2.0), cplx(-1.0, 0.0)};
  c.E = Eigen::MatrixXcd::Identity(3, 3);
  c.A = Eigen::MatrixXcd::Zero(3, 3);
  for (int k = 0; k < 3; ++k) c.A(k, k) = poles[static_cast<std::size_t>(k)];
  c.B.resize(3, 1);
  c.B << cplx(1, 2), cplx(1, -2), 0.7;
  c.C.resize(1, 3);
  c.C << cplx(0.3, -1), cplx(0.3, 1), 1.5;
  c.D = Eigen::MatrixXcd::Zero(1, 1);
  const auto r = realify(c, poles, poles);
  for (double w : ddc::test::log_grid(0.01, 100.0, 40)) {
    const cplx s(0.0, w);
    EXPECT_LE(std::abs(eval_descriptor(r, s) - eval_descriptor(c, s)), 1e-10);
  }
}

TEST(StepResponse, SecondOrderReferenceSettles) {
  const Evaluator m = [](cplx s) { return 1.0 / (s * s + 2.0 * s + 1.0); };
  const std::vector<double> t{20.0};
  EXPECT_NEAR(step_response(m, t)[0], 1.0, 1e-3);
}

TEST(StepResponse, PureDelayShiftsStep) {
  const Evaluator d = [](cplx s) { return std::exp(-s); };
  const std::vector<double> t{0.5, 1.5};
  const auto y = step_response(d, t, StepGrid::for_data(100.0));
  EXPECT_LT(y[0], 0.05);
  EXPECT_GT(y[1], 0.95);
}

TEST(StepResponse, ZeroTransfer) {
  const Evaluator z = [](cplx) { return cplx(0.0); };
  const std::vector<double> t{0.0, 1.0, 5.0};
  for (double v : step_response(z, t)) EXPECT_EQ(v, 0.0);
}

TEST(StepResponse, MatchesAnalyticFirstOrder) {
  // 1/(s+1): y = 1 - e^{-t}.
  const Evaluator h = [](cplx s) { return 1.0 / (s + 1.0); };
  std::vector<double> t;
  for (int k = 1; k <= 40; ++k) t.push_back(0.25 * k);
  const auto y = step_response(h, t);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(y[k], 1.0 - std::exp(-t[k]), 1e-4) << t[k];
}

TEST(StepResponse, RejectsBadGrid) {
  StepGrid g;
  g.points = 1;
  const std::vector<double> t{1.0};
  EXPECT_THROW(step_response([](cplx) { return cplx(1.0); }, t, g), Error);
}

TEST(SineIntegral, KnownValues) {
  EXPECT_NEAR(sine_integral(1.0), 0.946083070367183, 1e-14);
  EXPECT_NEAR(sine_integral(10.0), 1.658347594218874, 1e-13);
  EXPECT_NEAR(sine_integral(100.0), 1.562225466889056, 1e-13);
  EXPECT_NEAR(sine_integral(-2.0), -1.605412976802695, 1e-14);
}

TEST(BodeGrid, AcademicAtUnitFrequency) {
  const std::vector<double> w{1.0};
  const auto b = bode_grid(make_evaluator(academic()), w);
  EXPECT_NEAR(b[0].gain_db, 20.0 * std::log10(0.5 / std::sqrt(2.0)), 1e-12);
  EXPECT_NEAR(b[0].phase_deg, -45.0, 1e-12);
}

TEST(BodeGrid, Constant) {
  const auto w = ddc::test::log_grid(0.1, 10.0, 5);
  for (const auto& p : bode_grid([](cplx) { return cplx(1.0); }, w)) {
    EXPECT_EQ(p.gain_db, 0.0);
    EXPECT_EQ(p.phase_deg, 0.0);
  }
}

TEST(BodeGrid, DelayPhaseUnwrapped) {
  const auto w = ddc::test::log_grid(0.1, 10.0, 200);
  const auto b = bode_grid([](cplx s) { return std::exp(-s); }, w);
  for (const auto& p : b) {
    EXPECT_NEAR(p.gain_db, 0.0, 1e-12);
    EXPECT_NEAR(p.phase_deg, -p.omega * 180.0 / std::numbers::pi, 1e-9);
  }
}

TEST(BodeGrid, RequiresIncreasingFrequencies) {
  const std::vector<double> w{1.0, 1.0};
  EXPECT_THROW(bode_grid([](cplx) { return cplx(1.0); }, w), Error);
}

TEST(ToPolyForm, PoleResidueFirstOrder) {
  const auto pf = to_poly_form(PoleResidueModel{{-1.0}, {0.5}, 0.0});
  ASSERT_EQ(pf.num.size(), 1u);
  ASSERT_EQ(pf.den.size(), 2u);
  EXPECT_NEAR(pf.num[0], 0.5, 1e-15);
  EXPECT_NEAR(pf.den[0], 1.0, 1e-15);
  EXPECT_NEAR(pf.den[1], 1.0, 1e-15);
}

TEST(ToPolyForm, BarycentricSinglePoint) {
  const auto pf = to_poly_form(BarycentricModel{{0.0}, {1.0}, {1.0}});
  ASSERT_EQ(pf.den.size(), 2u);
  EXPECT_NEAR(pf.num.back(), 1.0, 1e-15);
  EXPECT_NEAR(pf.den[0], 1.0, 1e-15);
  EXPECT_NEAR(pf.den[1], 1.0, 1e-15);
}

TEST(ToPolyForm, RefusesHighOrder) {
  PoleResidueModel m;
  for (int k = 0; k < 31; ++k) {
    m.poles.push_back(cplx(-1.0 - k, 0.0));
    m.residues.push_back(1.0);
  }
  try {
    to_poly_form(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::coefficient_form_refused);
  }
}

TEST(ToPolyForm, AgreesAtRandomGridPoints) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = ddc::test::random_stable_model(rng, 1 + trial % 6);
    const auto pf = to_poly_form(m);
    EXPECT_EQ(pf.den.front(), 1.0);
    std::uniform_real_distribution<double> lw(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
      const cplx s(0.0, std::pow(10.0, lw(rng)));
      EXPECT_LE(rel_err(eval_poly_form(pf, s), ddc::test::model_evaluator(m)(s)), 1e-6);
    }
  }
}

// ---------------------------------------------------------------------------
// Properties

TEST(Property, ConjugateSymmetryOfRealForms) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = ddc::test::random_stable_model(rng, 1 + trial % 5);
    const auto d = to_descriptor(m);
    const auto pf = to_poly_form(m);
    for (int k = 0; k < 100; ++k) {
      const cplx s = random_point(rng);
      EXPECT_LE(rel_err(eval_descriptor(d, std::conj(s)), std::conj(eval_descriptor(d, s))), 1e-12);
      EXPECT_LE(rel_err(eval_pole_residue(m, std::conj(s)), std::conj(eval_pole_residue(m, s))), 1e-12);
      EXPECT_LE(rel_err(eval_poly_form(pf, std::conj(s)), std::conj(eval_poly_form(pf, s))), 1e-12);
    }
  }
}

TEST(Property, FormEquivalence) {
  std::mt19937_64 rng(5);
  const auto omega = ddc::test::log_grid(0.01, 100.0, 60);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t order = 2 + 2 * static_cast<std::size_t>(trial % 2);
    const auto pr = ddc::test::random_stable_model(rng, order);
    const auto oracle = ddc::test::model_evaluator(pr);

    const auto bary = aaa_fit(ddc::test::sample(oracle, omega), 1e-13, order).model;
    const auto from_bary = barycentric_to_realization(bary);
    const auto desc = to_descriptor(pr);
    const auto back = to_pole_residue(desc);
    const auto poly = to_poly_form(pr);
    const auto poly_b = to_poly_form(bary);
    for (int k = 0; k < 100; ++k) {
      const cplx s = random_point(rng);
      const cplx want = oracle(s);
      EXPECT_LE(rel_err(eval_descriptor(desc, s), want), 1e-8);
      EXPECT_LE(rel_err(eval_pole_residue(back, s), want), 1e-8);
      EXPECT_LE(rel_err(eval_poly_form(poly, s), want), 1e-8);
      EXPECT_LE(rel_err(eval_descriptor(from_bary, s), eval_barycentric(bary, s)), 1e-8);
      EXPECT_LE(rel_err(eval_poly_form(poly_b, s), eval_barycentric(bary, s)), 1e-8);
    }
  }
}

TEST(Property, StepTailMatchesDcGain) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m = ddc::test::random_stable_model(rng, 1 + trial % 4);
    double slowest = 1e300;
    for (cplx p : m.poles) slowest = std::min(slowest, std::abs(p.real()));
    const std::vector<double> t{10.0 / slowest};
    const double dc = eval_pole_residue(m, 0.0).real();
    const double y = step_response(make_evaluator(m), t)[0];
    EXPECT_LE(std::abs(y - dc), 1e-3 * std::abs(dc)) << "trial " << trial;
  }
}

TEST(Property, PolesOfPoleResidueRealization) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = ddc::test::random_stable_model(rng, 1 + trial % 6);
    const auto found = poles_of(to_descriptor(m)).finite;
    ASSERT_EQ(found.size(), m.poles.size());
    for (cplx p : m.poles) {
      double best = 1e300;
      for (cplx q : found) best = std::min(best, std::abs(p - q));
      EXPECT_LE(best, 1e-9);
    }
  }
}
