#include <doctest.h>

#include <cmath>

#include "dpl/error.hpp"
#include "dpl/normal.hpp"
#include "oracles.hpp"

TEST_CASE("normal cdf reference table") {
  // 40-digit reference values.
  struct Row {
    double x, p;
  };
  const Row table[] = {
      {-8.0, 6.2209605742717841235e-16},
      {-5.0, 2.8665157187919391167e-7},
      {-3.0, 0.0013498980316300945267},
      {-1.0, 0.15865525393145705141},
      {-0.5, 0.30853753872598689636},
      {0.0, 0.5},
      {0.5, 0.69146246127401310364},
      {1.0, 0.84134474606854294859},
      {2.0, 0.9772498680518207928},
      {3.0, 0.99865010196836990547},
      {5.0, 0.99999971334842812081},
      {8.0, 0.9999999999999993779},
  };
  for (const auto& r : table) {
    CAPTURE(r.x);
    CHECK(std::abs(dpl::normal_cdf(r.x) - r.p) <= 1e-12);
  }
  CHECK(std::abs(dpl::normal_cdf(-8.0) - 6.2209605742717841235e-16) / 6.22e-16 < 1e-9);
}

TEST_CASE("normal cdf at 1.6449") { CHECK(std::abs(dpl::normal_cdf(1.6449) - 0.95) < 1e-4); }

TEST_CASE("normal quantile against erf inversion") {
  for (double p : {1e-9, 1e-4, 0.005, 0.025, 0.1, 0.3, 0.5, 0.7, 0.95, 0.975, 0.995, 1 - 1e-6}) {
    CAPTURE(p);
    CHECK(std::abs(dpl::normal_quantile(p) - oracle::normal_quantile(p)) < 1e-9);
  }
  CHECK(std::abs(dpl::normal_quantile(0.995) - 2.5758293035489004539) < 1e-12);
  CHECK(std::abs(dpl::normal_quantile(0.025) + 1.9599639845400542118) < 1e-12);
  CHECK_THROWS_AS(dpl::normal_quantile(0.0), dpl::Error);
  CHECK_THROWS_AS(dpl::normal_quantile(1.0), dpl::Error);
}

TEST_CASE("normal pdf") {
  CHECK(dpl::normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(dpl::normal_pdf(1.5) == doctest::Approx(dpl::normal_pdf(-1.5)));
}
