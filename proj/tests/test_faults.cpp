#include <doctest.h>

#include <random>

#include "morphnmpc/faults.hpp"

using namespace morphnmpc;

namespace {
const FaultSchedule kStaged({FaultEvent{7.0, 14.0, 4, 0.33}, FaultEvent{14.0, 21.0, 4, 0.66},
                             FaultEvent{21.0, std::numeric_limits<double>::infinity(), 4, 1.0}});
}

TEST_CASE("loe lookup") {
  const FaultSchedule empty;
  for (double t : {0.0, 5.0, 100.0}) CHECK(loe_at(empty, 4, t) == 0.0);
  CHECK(loe_at(kStaged, 4, 15.0) == 0.66);
  CHECK(loe_at(kStaged, 4, 6.99) == 0.0);
  CHECK(loe_at(kStaged, 4, 7.0) == 0.33);   // start is inside
  CHECK(loe_at(kStaged, 4, 14.0) == 0.66);  // end is outside
  CHECK(loe_at(kStaged, 4, 1e6) == 1.0);
  CHECK(loe_at(kStaged, 1, 15.0) == 0.0);
  CHECK(loe_vector(kStaged, 15.0) == Vec4(0, 0, 0, 0.66));
  CHECK(kStaged.first_fault_time() == 7.0);
  CHECK(kStaged.complete_failure_time() == 21.0);
}

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(FaultSchedule({FaultEvent{1, 5, 4, 0.5}, FaultEvent{4, 6, 4, 0.2}}), ConfigError);
  CHECK_NOTHROW(FaultSchedule({FaultEvent{1, 5, 4, 0.5}, FaultEvent{4, 6, 3, 0.2}}));
  CHECK_NOTHROW(FaultSchedule({FaultEvent{1, 5, 4, 0.5}, FaultEvent{5, 6, 4, 0.2}}));
  CHECK_THROWS_AS(FaultSchedule({FaultEvent{1, 5, 5, 0.5}}), ConfigError);
  CHECK_THROWS_AS(FaultSchedule({FaultEvent{1, 5, 4, 1.5}}), ConfigError);
  CHECK_THROWS_AS(FaultSchedule({FaultEvent{5, 1, 4, 0.5}}), ConfigError);
}

TEST_CASE("shifted schedule") {
  const FaultSchedule s = kStaged.shifted_to(10.0);
  CHECK(s.first_fault_time() == 10.0);
  CHECK(loe_at(s, 4, 17.5) == 0.66);
  CHECK(loe_at(s, 4, 24.0) == 1.0);
}

TEST_CASE("effective thrust") {
  const FaultSchedule fail4({FaultEvent{4.0, std::numeric_limits<double>::infinity(), 4, 1.0}});
  SUBCASE("no active event clips at the ceiling only") {
    CHECK(effective_thrust(Vec4(5, 10, 35, 29), 1.0, fail4, 30.0) == Vec4(5, 10, 30, 29));
  }
  SUBCASE("complete failure") {
    CHECK(effective_thrust(Vec4(14, 14, 14, 14), 4.0, fail4, 30.0) == Vec4(14, 14, 14, 0));
  }
  SUBCASE("66% loss against a 30 N ceiling") {
    CHECK(effective_thrust(Vec4(10, 10, 10, 25), 15.0, kStaged, 30.0)(3) == doctest::Approx(10.2));
  }
  SUBCASE("hover-relative normalization") {
    CHECK(rotor_ceiling(0.33, 30.0, LoeNormalization::kHover, 14.715) == doctest::Approx(30.0 - 0.33 * 14.715));
    CHECK(rotor_ceiling(1.0, 30.0, LoeNormalization::kHover, 14.715) == 0.0);
  }
  SUBCASE("properties") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> thrust(0.0, 40.0), loe(0.0, 1.0), time(0.0, 30.0);
    for (int i = 0; i < 500; ++i) {
      const Vec4 cmd(thrust(rng), thrust(rng), thrust(rng), thrust(rng));
      const double a = loe(rng), b = loe(rng);
      const FaultSchedule lo({FaultEvent{0.0, 100.0, 2, std::min(a, b)}});
      const FaultSchedule hi({FaultEvent{0.0, 100.0, 2, std::max(a, b)}});
      for (auto norm : {LoeNormalization::kCeiling, LoeNormalization::kHover}) {
        const double t = time(rng);
        const Vec4 el = effective_thrust(cmd, t, lo, 30.0, norm, 14.715);
        const Vec4 eh = effective_thrust(cmd, t, hi, 30.0, norm, 14.715);
        CHECK((el.array() <= cmd.array()).all());
        CHECK(eh(1) <= el(1));
        for (int k : {0, 2, 3}) CHECK(el(k) == std::min(cmd(k), 30.0));
      }
    }
  }
}
