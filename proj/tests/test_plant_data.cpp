#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ddc/plant_data.hpp"
#include "support.hpp"

using namespace ddc;
using ddc::test::rel_err;

namespace {

double actuator_modulus(double w0, double m, double w) {
  return std::abs(w0 * w0 / (cplx(-w * w, 0.0) + m * w0 * cplx(0.0, w) + w0 * w0));
}

GridSpec academic_grid() { return {1e-2, 1e2, 60, true}; }

}  // namespace

TEST(TransportResponse, DirectFormulaAtOne) {
  const TransportPlant t;
  const double xm = TransportPlant::kDefaultSensor;
  const double want = std::sqrt(std::numbers::pi) * std::exp(-xm * xm) * 9.0 / (1.0 + 1.5 + 9.0);
  const cplx got = transport_response(t, 1.0);
  EXPECT_NEAR(got.real(), want, 1e-15 * want);
  EXPECT_EQ(got.imag(), 0.0);
}

TEST(TransportResponse, DefaultSensorLocation) { EXPECT_NEAR(TransportPlant::kDefaultSensor, 1.9592, 5e-5); }

TEST(TransportResponse, ModulusIdentity) {
  const TransportPlant t;
  for (double w : {0.1, 1.0, 10.0}) {
    const double want = std::sqrt(std::numbers::pi / w) * actuator_modulus(3.0, 0.5, w);
    EXPECT_NEAR(std::abs(transport_response(t, cplx(0.0, w))), want, 1e-13 * want) << w;
  }
}

TEST(TransportResponse, DecaysOnRealAxis) {
  const TransportPlant t;
  EXPECT_LT(std::abs(transport_response(t, 50.0)), 1e-80);
  EXPECT_LT(std::abs(transport_response(t, 200.0)), std::abs(transport_response(t, 50.0)));
}

TEST(TransportResponse, BranchPoint) {
  try {
    transport_response(TransportPlant{}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::branch_point);
  }
}

TEST(TransportPlant, InvalidParametersRejected) {
  TransportPlant t;
  t.x_m = 4.0;
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.omega0 = 0.0;
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.damping = -1.0;
  EXPECT_THROW(t.validate(), Error);
}

TEST(SamplePlant, AcademicGrid) {
  const auto d = sample_plant(AcademicPlant{}, academic_grid());
  ASSERT_EQ(d.size(), 60u);
  EXPECT_EQ(d.omega.front(), 0.01);
  EXPECT_NEAR(d.omega.back(), 100.0, 1e-12);
  EXPECT_LE(rel_err(d.values.front(), 0.5 / (cplx(0.0, 0.01) + 1.0)), 1e-15);
  for (std::size_t k = 1; k + 1 < d.size(); ++k) {
    EXPECT_NEAR(std::log(d.omega[k + 1] / d.omega[k]), std::log(d.omega[k] / d.omega[k - 1]), 1e-12);
  }
  d.validate();
}

TEST(SamplePlant, TwoPoints) {
  const auto d = sample_plant(AcademicPlant{}, {0.3, 7.0, 2, true});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.omega[0], 0.3);
  EXPECT_EQ(d.omega[1], 7.0);
}

TEST(SamplePlant, LinearSpacing) {
  const auto w = make_grid({1.0, 5.0, 5, false});
  ASSERT_EQ(w.size(), 5u);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(w[k], 1.0 + static_cast<double>(k), 1e-14);
}

TEST(SamplePlant, TransportGrid) {
  const auto d = sample_plant(TransportPlant{}, {1e-2, std::pow(10.0, 1.5), 100, true});
  ASSERT_EQ(d.size(), 100u);
  const double want = std::sqrt(std::numbers::pi / 0.01) * actuator_modulus(3.0, 0.5, 0.01);
  EXPECT_NEAR(std::abs(d.values[0]), want, 1e-13 * want);
  EXPECT_NEAR(d.omega.back(), std::pow(10.0, 1.5), 1e-12);
  EXPECT_EQ(d.metadata.at("source"), "transport");
}

TEST(SamplePlant, BadGridRejected) {
  EXPECT_THROW(sample_plant(AcademicPlant{}, {1.0, 1.0, 10, true}), Error);
  EXPECT_THROW(sample_plant(AcademicPlant{}, {1.0, 2.0, 1, true}), Error);
  EXPECT_THROW(sample_plant(AcademicPlant{}, {-1.0, 2.0, 10, true}), Error);
}

TEST(SamplePlant, UnknownPlant) {
  try {
    make_plant("bogus");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_plant);
  }
  EXPECT_EQ(plant_id(make_plant("academic")), "academic");
  EXPECT_EQ(plant_id(make_plant("transport")), "transport");
}

TEST(SamplePlant, Deterministic) {
  const GridSpec g{1e-2, 10.0, 37, true};
  const auto a = sample_plant(TransportPlant{}, g);
  const auto b = sample_plant(TransportPlant{}, g);
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_EQ(a.values, b.values);
}

TEST(Noise, ZeroAmplitudeLeavesValues) {
  const auto d = sample_plant(AcademicPlant{}, academic_grid());
  const auto n = add_noise(d, 0.0, 42);
  EXPECT_EQ(n.values, d.values);
  EXPECT_EQ(n.omega, d.omega);
}

TEST(Noise, SameSeedSameOutput) {
  const auto d = sample_plant(TransportPlant{}, {1e-2, 30.0, 100, true});
  EXPECT_EQ(add_noise(d, 0.5, 9).values, add_noise(d, 0.5, 9).values);
  EXPECT_NE(add_noise(d, 0.5, 9).values, add_noise(d, 0.5, 10).values);
}

TEST(Noise, MultipliersWithinBand) {
  const auto d = sample_plant(TransportPlant{}, {1e-2, 30.0, 100, true});
  const auto n = add_noise(d, 0.5, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const cplx ratio = n.values[i] / d.values[i];
    EXPECT_GE(ratio.real() - 1.0, -1e-15);
    EXPECT_LE(ratio.real() - 1.0, 0.5);
    EXPECT_NEAR(ratio.imag(), 0.0, 1e-15);
  }
  EXPECT_EQ(n.metadata.at("noise_seed"), "3");
  EXPECT_EQ(n.metadata.at("noise_amplitude"), "0.5");
}

TEST(Noise, NegativeAmplitudeRejected) {
  EXPECT_THROW(noise_multipliers(4, -0.1, 1), Error);
}

TEST(SplitMix64, KnownAnswers) {
  // Reference values of the standard SplitMix64 stream.
  SplitMix64 g0(0);
  EXPECT_EQ(g0.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(g0.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(g0.next(), 0x06C45D188009454FULL);
}

TEST(SplitMix64, UniformInUnitInterval) {
  SplitMix64 g(123);
  for (int k = 0; k < 10000; ++k) {
    const double u = g.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(SplitSubgrids, SixMembersOfTen) {
  const auto d = sample_plant(AcademicPlant{}, academic_grid());
  const auto s = split_subgrids(d, 6);
  ASSERT_EQ(s.parts.size(), 6u);
  for (const auto& p : s.parts) EXPECT_EQ(p.size(), 10u);
  EXPECT_EQ(s.parts[2].omega[0], d.omega[2]);
  EXPECT_EQ(s.member_of[13], 1u);
}

TEST(SplitSubgrids, SingleMemberIsIdentity) {
  const auto d = sample_plant(AcademicPlant{}, academic_grid());
  const auto s = split_subgrids(d, 1);
  ASSERT_EQ(s.parts.size(), 1u);
  EXPECT_EQ(s.parts[0].omega, d.omega);
  EXPECT_EQ(s.parts[0].values, d.values);
}

TEST(SplitSubgrids, TooManyMembers) {
  const auto d = sample_plant(AcademicPlant{}, {1.0, 2.0, 3, true});
  try {
    split_subgrids(d, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_many_members);
  }
  EXPECT_THROW(make_family(make_reference_members("second-order", {1, 2, 3, 4}), 3), Error);
}

TEST(SplitSubgrids, MergeRestoresInputForEveryCount) {
  const auto d = sample_plant(AcademicPlant{}, {1e-2, 1e2, 23, true});
  for (std::size_t ns = 1; ns <= d.size(); ++ns) {
    const auto s = split_subgrids(d, ns);
    std::vector<std::pair<double, cplx>> merged;
    for (const auto& p : s.parts) {
      EXPECT_TRUE(std::is_sorted(p.omega.begin(), p.omega.end()));
      for (std::size_t k = 0; k < p.size(); ++k) merged.emplace_back(p.omega[k], p.values[k]);
    }
    std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    ASSERT_EQ(merged.size(), d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      EXPECT_EQ(merged[k].first, d.omega[k]);
      EXPECT_EQ(merged[k].second, d.values[k]);
      EXPECT_EQ(s.member_of[k], k % ns);
    }
  }
}

TEST(Reference, SecondOrderExamples) {
  const ReferenceSpec m = SecondOrderReference{1.0};
  EXPECT_EQ(reference_eval(m, 0.0), cplx(1.0));
  EXPECT_LE(std::abs(reference_eval(m, cplx(0, 1)) - cplx(0, -0.5)), 1e-15);
}

TEST(Reference, AcademicFamily) {
  const std::vector<double> p{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  const auto members = make_reference_members("second-order", p);
  ASSERT_EQ(members.size(), 6u);
  const auto fam = make_family(members, 60);
  fam.validate(60);
  for (double w : ddc::test::log_grid(0.01, 100.0, 20)) {
    const cplx s(0.0, w);
    EXPECT_EQ(reference_eval(fam.members[0], s), reference_eval(SecondOrderReference{1.0}, s));
    const double pj = 1.3;
    EXPECT_LE(rel_err(reference_eval(fam.members[3], s), 1.0 / (s * s / (pj * pj) + 2.0 * s / pj + 1.0)), 1e-15);
  }
}

TEST(Reference, DelayedOscillatoryDefault) {
  const DelayedOscillatoryReference r;
  EXPECT_NEAR(std::abs(reference_eval(r, cplx(0.0, 1e-9))), 1.0, 1e-8);
  const double w = 0.7;
  const double modulus = 0.04 / std::abs(cplx(-w * w + 0.04, 0.2 * w)) / std::abs(cplx(1.0, w / 0.1));
  EXPECT_NEAR(std::abs(reference_eval(r, cplx(0.0, w))), modulus, 1e-14);
}

TEST(Reference, PolyFormMember) {
  const ReferenceSpec m = RationalPolyForm{{2.0}, {1.0, 2.0}};
  EXPECT_LE(std::abs(reference_eval(m, 0.0) - 1.0), 1e-15);
}

TEST(Reference, UnknownKind) {
  try {
    make_reference_members("cubic", {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_reference);
  }
}

TEST(DatasetCsv, RoundTripIsBitExact) {
  auto d = add_noise(sample_plant(TransportPlant{}, {1e-2, 30.0, 50, true}), 0.5, 77);
  std::stringstream ss;
  write_dataset(ss, d);
  const auto back = read_dataset(ss);
  EXPECT_EQ(back.omega, d.omega);
  EXPECT_EQ(back.values, d.values);
  EXPECT_EQ(back.metadata, d.metadata);
}

TEST(DatasetCsv, EmptyFile) {
  std::istringstream is("");
  EXPECT_THROW(read_dataset(is), Error);
}

TEST(DatasetCsv, HeaderRequired) {
  std::istringstream is("1,2,3\n");
  try {
    read_dataset(is);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_EQ(e.line(), std::optional<std::size_t>(1));
  }
  std::istringstream header_only("omega,re,im\n");
  EXPECT_THROW(read_dataset(header_only), Error);
}

TEST(DatasetCsv, LineNumbersOnBadRows) {
  const std::pair<const char*, std::size_t> cases[] = {
      {"# source=x\nomega,re,im\n1,0,0\n2,abc,0\n", 4},
      {"omega,re,im\n1,0,0\n1,0,0\n", 3},
      {"omega,re,im\n1,0\n", 2},
      {"omega,re,im\n1,0,0,4\n", 2},
      {"omega,re,im\n-1,0,0\n", 2},
  };
  for (const auto& [text, line] : cases) {
    std::istringstream is(text);
    try {
      read_dataset(is);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.line(), std::optional<std::size_t>(line)) << text;
    }
  }
}

TEST(Property, PlantConjugateSymmetry) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 5.0), v(-5.0, 5.0);
  for (const PlantSpec& plant : {PlantSpec(AcademicPlant{}), PlantSpec(TransportPlant{})}) {
    for (int k = 0; k < 100; ++k) {
      const cplx s(u(rng), v(rng));
      EXPECT_LE(rel_err(plant_response(plant, std::conj(s)), std::conj(plant_response(plant, s))), 1e-12);
    }
  }
}
