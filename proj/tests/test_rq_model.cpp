#include <doctest.h>

#include <cmath>
#include <random>

#include "ladderopt/error.hpp"
#include "ladderopt/rq_model.hpp"
#include "oracles.hpp"

using namespace ladderopt;

namespace {

RateQualityCurve curve(std::vector<std::pair<double, double>> pts, Pixels res = 720) {
  std::vector<RqSample> s;
  for (auto [r, q] : pts) s.push_back({r, q, std::nullopt});
  return RateQualityCurve(res, std::move(s));
}

}  // namespace

TEST_CASE("eval_quality interpolates and clamps") {
  const auto c2 = curve({{100, 30}, {200, 40}});
  CHECK(eval_quality(c2, 150) == doctest::Approx(35));
  CHECK(eval_quality(c2, 50) == 30);
  CHECK(eval_quality(c2, 1e9) == 40);
  const auto c3 = curve({{100, 30}, {200, 40}, {400, 44}});
  // hand: 40 + (300-200)/(400-200) * (44-40)
  CHECK(eval_quality(c3, 300) == doctest::Approx(42).epsilon(1e-15));
}

TEST_CASE("eval_quality_slope is right-handed and zero outside") {
  const auto c2 = curve({{100, 30}, {200, 40}});
  CHECK(eval_quality_slope(c2, 150) == doctest::Approx(0.1));
  CHECK(eval_quality_slope(c2, 200) == 0);
  CHECK(eval_quality_slope(c2, 99) == 0);
  CHECK(eval_quality_slope(c2, 100) == doctest::Approx(0.1));
  const auto c3 = curve({{100, 30}, {200, 40}, {400, 44}});
  CHECK(eval_quality_slope(c3, 200) == doctest::Approx(0.02));
}

TEST_CASE("bitrate_range") {
  CHECK(bitrate_range(curve({{100, 30}, {200, 40}})) == std::pair<double, double>{100, 200});
  CHECK(bitrate_range(curve({{50, 20}, {500, 45}})) == std::pair<double, double>{50, 500});
  const SynthCurveParams p{20, 5, 1e6, 1e5, 1e7};
  const auto sweep = synth_curve(1080, p);
  CHECK(bitrate_range(sweep).first == sweep.sample(*sweep.find_label("crf55")).bitrate);
  CHECK(bitrate_range(sweep).second == sweep.sample(*sweep.find_label("crf5")).bitrate);
}

TEST_CASE("strict constructor rejects bad samples") {
  CHECK_THROWS_AS(curve({{100, 30}}), ValidationError);
  CHECK_THROWS_AS(curve({{200, 30}, {100, 40}}), ValidationError);
  CHECK_THROWS_AS(curve({{100, 30}, {100, 40}}), ValidationError);
  CHECK_THROWS_AS(curve({{100, 40}, {200, 30}}), ValidationError);
  CHECK_THROWS_AS(curve({{0, 30}, {200, 40}}), ValidationError);
  CHECK_THROWS_AS(curve({{100, NAN}, {200, 40}}), ValidationError);
  CHECK_THROWS_AS(curve({{100, 30}, {200, 40}}, 0), ValidationError);
}

TEST_CASE("from_raw sorts and repairs with a running maximum") {
  std::vector<std::string> warnings;
  const auto c = RateQualityCurve::from_raw(
      480, {{300, 41, "c"}, {100, 30, "a"}, {200, 42, "b"}, {400, 45, "d"}}, &warnings);
  REQUIRE(c.size() == 4);
  CHECK(c.bitrates()[0] == 100);
  CHECK(c.qualities()[2] == 42);  // 41 raised to 42
  CHECK(*c.labels()[2] == "c");
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(RateQualityCurve::from_raw(480, {{100, 30, {}}, {100, 31, {}}}), ValidationError);
}

TEST_CASE("ChunkRqModel invariants") {
  const auto c = curve({{100, 30}, {200, 40}}, 720);
  CHECK_THROWS_AS(ChunkRqModel("x", 480, {c}), ValidationError);
  CHECK_THROWS_AS(ChunkRqModel("x", 1080, {c, c}), ValidationError);
  CHECK_THROWS_AS(ChunkRqModel("x", 1080, {}), ValidationError);
  const ChunkRqModel m("x", 1080, {c});
  CHECK(m.has(720));
  CHECK_THROWS_AS(m.curve(1080), ValidationError);
}

TEST_CASE("synth_curve") {
  const SynthCurveParams p{20, 5, 1e6};
  const auto a = synth_curve(1080, p);
  CHECK(a.size() == 11);
  // Lowest sample is knee/1000, where log(1 + r/knee) is ~0.
  CHECK(a.qualities()[0] == doctest::Approx(20).epsilon(1e-2));
  const auto b = synth_curve(1080, p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.bitrates()[i] == b.bitrates()[i]);
    CHECK(a.qualities()[i] == b.qualities()[i]);
  }
  const auto c = synth_curve(240, {25, 4, 2e5});
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.qualities()[i] > c.qualities()[i - 1]);
  const std::array<int, 1> extra{23};
  const auto d = synth_curve(240, {25, 4, 2e5}, extra);
  CHECK(d.size() == 12);
  CHECK(d.find_label("crf23"));
  CHECK_THROWS_AS(synth_curve(240, {25, 0, 2e5}), ValidationError);
  CHECK_THROWS_AS(synth_curve(240, {25, 4, -1}), ValidationError);
}

TEST_CASE("curve properties on random curves") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, double>> pts;
    double r = 1e4 * (1 + u(rng)), q = 20 * u(rng);
    const int n = 2 + static_cast<int>(u(rng) * 10);
    for (int k = 0; k < n; ++k) {
      pts.push_back({r, q});
      r *= 1.1 + u(rng);
      q += u(rng) < 0.2 ? 0.0 : 5 * u(rng);
    }
    const auto c = curve(pts);
    std::vector<double> xs, ys;
    for (auto [x, y] : pts) xs.push_back(x), ys.push_back(y);
    for (auto [x, y] : pts) CHECK(eval_quality(c, x) == y);
    double prev = -1e300;
    for (int k = 0; k < 200; ++k) {
      const double t = xs.front() * 0.5 + (xs.back() * 1.5 - xs.front() * 0.5) * k / 199.0;
      const double v = eval_quality(c, t);
      CHECK(v >= prev);
      CHECK(v == doctest::Approx(oracle::interp(xs, ys, t)).epsilon(1e-12));
      prev = v;
    }
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
      const double e = xs[k] * 1e-9;
      CHECK(std::abs(eval_quality(c, xs[k] - e) - eval_quality(c, xs[k] + e)) < 1e-6);
    }
    // slope integrates back over [a, b]
    const double a = xs.front() + 0.3 * (xs[1] - xs[0]);
    const double b = xs.back() - 0.4 * (xs.back() - xs[xs.size() - 2]);
    std::vector<double> cuts{a, b};
    for (double x : xs)
      if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    double integral = 0;
    for (std::size_t k = 1; k < cuts.size(); ++k) integral += eval_quality_slope(c, cuts[k - 1]) * (cuts[k] - cuts[k - 1]);
    CHECK(integral == doctest::Approx(eval_quality(c, b) - eval_quality(c, a)).epsilon(1e-10));
  }
}
