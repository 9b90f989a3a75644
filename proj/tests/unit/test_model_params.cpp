#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gfd/model_params.hpp"

using namespace gfd;

namespace {

ModelParams make(int d, double alpha, std::array<double, 4> beta, double p) {
  ModelParams P;
  P.d = d;
  P.alpha = alpha;
  P.beta = beta;
  P.p = p;
  return P;
}

ErrorCode code_of(const ModelParams& P) {
  try {
    validate_params(P);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a rejection");
  return ErrorCode::kParse;
}

}  // namespace

TEST_CASE("admissible parameters pass validation unchanged") {
  const auto P = make(3, 1.0, {1.0, 0.5, 0, 0}, 1.2);
  CHECK(validate_params(P) == P);
  // d = 1 is allowed once alpha + beta1 + beta2 < 1
  CHECK_NOTHROW(validate_params(make(1, 0.5, {0.3, 0.1, 0, 0}, 0.4)));
}

TEST_CASE("each violated inequality has its own error code") {
  CHECK(code_of(make(3, 1.0, {1.0, 0.5, 0, 0}, 2.1)) == ErrorCode::kPOutOfRange);
  CHECK(code_of(make(2, 1.0, {0.6, 0.4, 0, 0}, 0.5)) == ErrorCode::kDimensionTooSmall);
  CHECK(code_of(make(2, 1.0, {0, 0, 0, 0}, 1.0)) == ErrorCode::kPOutOfRange);   // p = alpha + beta1
  CHECK(code_of(make(2, 1.5, {0, 0, 0, 0}, 0.5)) == ErrorCode::kPOutOfRange);   // p = alpha - 1
  CHECK(code_of(make(1, 1.0, {0.5, 0, 0, 0}, 0.5)) == ErrorCode::kDimensionTooSmall);
  CHECK(code_of(make(2, 1.0, {0, 0, 1.0, 0}, 0.5)) == ErrorCode::kLogWithoutPower);
  CHECK(code_of(make(2, 1.0, {0.5, 0, 0, 1.0}, 0.5)) == ErrorCode::kLogWithoutPower);
  CHECK(code_of(make(2, 2.0, {0, 0, 0, 0}, 1.5)) == ErrorCode::kBadAlpha);
  CHECK(code_of(make(2, 1.0, {-0.1, 0, 0, 0}, 0.5)) == ErrorCode::kNegativeBeta);
}

TEST_CASE("regime classification") {
  const auto at = [](double p) { return classify_regime(make(2, 1.0, {0.6, 0.3, 0, 0}, p)); };
  CHECK(at(1.2).tag == RegimeTag::PolyPoly);
  CHECK(at(1.2).a_p == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(at(1.45).tag == RegimeTag::CriticalLog);
  CHECK(std::abs(at(1.45).a_p) <= 1e-12);
  CHECK(at(1.55).tag == RegimeTag::Anomalous);
  CHECK(at(1.55).a_p == doctest::Approx(0.2).epsilon(1e-12));
  // a caller tolerance widens the critical window
  CHECK(classify_regime(make(2, 1.0, {0.6, 0.3, 0, 0}, 1.4501), 1e-3).tag == RegimeTag::CriticalLog);
}

TEST_CASE("regime tag agrees with the sign of a_p on random draws") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int n = 0; n < 10000; ++n) {
    const double alpha = 0.05 + 1.9 * u(rng);
    const std::array<double, 4> beta{2.0 * u(rng), 2.0 * u(rng), 0.0, 0.0};
    auto P = make(3, alpha, beta, 0.0);
    P.p = P.p_lower() + (P.p_upper() - P.p_lower()) * (0.001 + 0.998 * u(rng));
    const auto r = classify_regime(validate_params(P));
    const RegimeTag expected = r.a_p < -1e-12 ? RegimeTag::PolyPoly
                               : r.a_p > 1e-12 ? RegimeTag::Anomalous
                                               : RegimeTag::CriticalLog;
    CHECK(r.tag == expected);
    if (beta[0] <= beta[1]) CHECK(r.tag == RegimeTag::PolyPoly);
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("point scaling and translation") {
  CHECK(scale_point(HalfSpacePoint({0.0}, 1.0), 2.0) == HalfSpacePoint({0.0}, 2.0));
  const HalfSpacePoint x({3.0}, 4.0);
  CHECK(scale_point(x, 1.0) == x);
  CHECK(scale_point(x, 0.5) == HalfSpacePoint({1.5}, 2.0));
  CHECK_THROWS_AS(scale_point(x, 0.0), Error);
  CHECK(translate_lateral(x, {1.0}) == HalfSpacePoint({4.0}, 4.0));
  CHECK_THROWS_AS(HalfSpacePoint({0.0}, 0.0), Error);
}

TEST_CASE("box membership is open") {
  const BoxRegion D({0.0}, 1.0, 1.0);
  CHECK(D.contains(HalfSpacePoint({0.5}, 0.5)));
  CHECK_FALSE(D.contains(HalfSpacePoint({1.0}, 0.5)));
  CHECK_FALSE(D.contains(HalfSpacePoint({0.0}, 1.0)));
  CHECK_THROWS_AS(BoxRegion({0.0}, 0.0, 1.0), Error);
}

TEST_CASE("params JSON round trip and point parsing") {
  const auto P = make(3, 1.5, {1.0, 0.5, 0.5, 0.5}, 1.5);
  const nlohmann::json j = P;
  CHECK(j.get<ModelParams>() == P);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"d":2,"alpha":1,"beta":[0,0],"p":0.5})").get<ModelParams>(), Error);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"d":2,"alpha":1,"beta":[0,0,0,0],"p":1.5})").get<ModelParams>(), Error);
  const auto x = parse_point("0,0.01", 2);
  CHECK(x == HalfSpacePoint({0.0}, 0.01));
  CHECK_THROWS_AS(parse_point("0,0.01", 3), Error);
  CHECK_THROWS_AS(parse_point("0,abc", 2), Error);
}
