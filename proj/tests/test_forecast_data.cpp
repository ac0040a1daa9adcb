#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mpj/forecast_data.hpp"

using namespace mpj;
using namespace mpj::forecast;

namespace {

// Snapshot k holds the value k everywhere, so indices can be read back.
std::shared_ptr<const SnapshotMatrix> indexed(std::size_t k, Grid2D g = {2, 2}) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(g.points()), static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).setConstant(static_cast<double>(c));
  return std::make_shared<const SnapshotMatrix>(g, 0.1, m);
}

}  // namespace

TEST_CASE("split boundaries") {
  SUBCASE("351 samples, 184/45/122") {
    const auto s = split(*indexed(351), {184, 45, 122});
    CHECK(s.train.samples() == 184);
    CHECK(s.validation.column(0)(0) == 184.0);
    CHECK(s.test.column(0)(0) == 229.0);
    CHECK(s.test.samples() == 122);
  }
  SUBCASE("301 samples, 105/39/157") {
    const auto s = split(*indexed(301), {105, 39, 157});
    CHECK(s.validation.column(0)(0) == 105.0);
    CHECK(s.test.column(0)(0) == 144.0);
  }
  SUBCASE("10 samples, 6/2/2") {
    const auto s = split(*indexed(10), {6, 2, 2});
    for (std::size_t k = 0; k < 6; ++k) CHECK(s.train.column(k)(0) == static_cast<double>(k));
    CHECK(s.validation.column(0)(0) == 6.0);
    CHECK(s.validation.column(1)(0) == 7.0);
    CHECK(s.test.column(0)(0) == 8.0);
    CHECK(s.test.column(1)(0) == 9.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(split(*indexed(10), {6, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(split(*indexed(10), {8, 2, 0}), std::invalid_argument);
  }
  SUBCASE("proportional scaling") {
    const SplitSpec ref{184, 45, 122};
    const auto same = scale_split(ref, 351);
    CHECK(same.training == 184);
    CHECK(same.test == 122);
    const auto half = scale_split(ref, 200);
    CHECK(half.total() == 200);
    CHECK(half.training == 105);
    CHECK(half.validation == 26);
  }
}

TEST_CASE("rolling windows") {
  SUBCASE("184 samples, q=10 gives 173 windows") {
    const auto w = rolling_windows(indexed(184), 10);
    CHECK(w.size() == 173);
    CHECK(w.inputs(172)(0, 0) == 172.0);
    CHECK(w.targets(172)(0, 1) == 183.0);
  }
  SUBCASE("boundary cases") {
    const auto one = rolling_windows(indexed(12), 10);
    REQUIRE(one.size() == 1);
    for (Eigen::Index c = 0; c < 10; ++c) CHECK(one.inputs(0)(0, c) == static_cast<double>(c));
    CHECK(one.targets(0)(0, 0) == 10.0);
    CHECK(one.targets(0)(0, 1) == 11.0);
    CHECK(rolling_windows(indexed(11), 10).empty());
  }
  SUBCASE("count law against enumeration") {
    std::mt19937_64 rng(184);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 1 + rng() % 300;
      const std::size_t q = 1 + rng() % 40;
      std::size_t enumerated = 0;
      for (std::size_t start = 0; start + q + 2 <= k; ++start) ++enumerated;
      CHECK(window_count(k, q, 2) == enumerated);
      CHECK(rolling_windows(indexed(k, {1, 1}), q).size() == enumerated);
    }
  }
  SUBCASE("no leakage: windows of the training split stay inside it") {
    const auto parts = split(*indexed(40), {24, 8, 8});
    const auto w = rolling_windows(std::make_shared<const SnapshotMatrix>(parts.train), 5, 2, SplitRange::Training);
    CHECK(w.range() == SplitRange::Training);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w.targets(i).maxCoeff() < 24.0);
  }
  SUBCASE("windows are views into the source") {
    const auto src = indexed(20);
    const auto w = rolling_windows(src, 4);
    CHECK(w.inputs(3).data() == src->data().col(3).data());
  }
  SUBCASE("horizon is configurable") {
    const auto w = rolling_windows(indexed(20), 4, 3);
    CHECK(w.size() == 14);
    CHECK(w.targets(0).cols() == 3);
  }
  SUBCASE("q must be positive") {
    CHECK_THROWS_AS(rolling_windows(indexed(5), 0), std::invalid_argument);
  }
}
