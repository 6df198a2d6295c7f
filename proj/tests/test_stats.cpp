#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "nucleus/numeric.hpp"
#include "nucleus/stats.hpp"

using namespace nucleus;
using stats::Cell;
using stats::CellKey;

namespace {

// Independent reference for the two-sided t tail: numerical integration of
// the Student density over [|t|, inf), mapped to [0,1) and evaluated with
// adaptive Simpson.
double t_density(double x, double df) {
  const double c = std::lgamma((df + 1.0) / 2.0) -
                   std::lgamma(df / 2.0) -
                   0.5 * std::log(df * M_PI);
  return std::exp(c - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

double tail_integrand(double u, double t0, double df) {
  // x = t0 + u/(1-u), dx = 1/(1-u)^2 du
  const double om = 1.0 - u;
  const double x = t0 + u / om;
  return t_density(x, df) / (om * om);
}

double simpson(double a, double b, double fa, double fm, double fb, double t0,
               double df, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = tail_integrand(lm, t0, df);
  const double frm = tail_integrand(rm, t0, df);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return simpson(a, m, fa, flm, fm, t0, df, eps / 2.0, depth - 1) +
         simpson(m, b, fm, frm, fb, t0, df, eps / 2.0, depth - 1);
}

double reference_two_sided_p(double t, double df) {
  const double t0 = std::fabs(t);
  const double a = 0.0, b = 1.0 - 1e-12;
  const double fa = tail_integrand(a, t0, df);
  const double fb = tail_integrand(b, t0, df);
  const double fm = tail_integrand(0.5 * (a + b), t0, df);
  const double tail = simpson(a, b, fa, fm, fb, t0, df, 1e-13, 40);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace

TEST_CASE("mean and standard deviations") {
  const std::vector<double> xs = {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  CHECK(stats::mean(xs) == doctest::Approx(5.0));
  CHECK(stats::population_sd(xs) == doctest::Approx(2.0));
  CHECK(stats::sample_sd(xs) == doctest::Approx(2.13809).epsilon(1e-5));
}

TEST_CASE("textbook paired t-test") {
  // pairs (1,2),(2,4),(3,6): differences 1,2,3
  const auto r = stats::paired_ttest({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0});
  CHECK(!r.zero_variance);
  CHECK(r.df == doctest::Approx(2.0));
  CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-9));
  // closed form: p = 1 - sqrt(6/7)
  CHECK(r.p == doctest::Approx(1.0 - std::sqrt(6.0 / 7.0)).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(reference_two_sided_p(r.t, r.df))
                   .epsilon(1e-6));
}

TEST_CASE("welch unpaired t-test") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> ys = {2.0, 4.0, 6.0, 8.0};
  const auto r = stats::unpaired_ttest(xs, ys);
  CHECK(!r.zero_variance);
  // hand-computed Welch statistic and df
  CHECK(r.t == doctest::Approx(-2.5 / std::sqrt(25.0 / 12.0)).epsilon(1e-9));
  const double se2 = 5.0 / 12.0 + 20.0 / 12.0;
  const double df = se2 * se2 /
                    (std::pow(5.0 / 12.0, 2) / 3.0 +
                     std::pow(20.0 / 12.0, 2) / 3.0);
  CHECK(r.df == doctest::Approx(df).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(reference_two_sided_p(r.t, r.df))
                   .epsilon(1e-6));
}

TEST_CASE("randomized p-values match the integration oracle to 1e-6") {
  numeric::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const double t = rng.uniform(-6.0, 6.0);
    const double df = rng.uniform(1.0, 60.0);
    const double p = stats::student_t_two_sided_p(t, df);
    const double ref = reference_two_sided_p(t, df);
    CHECK(std::fabs(p - ref) < 1e-6);
  }
}

TEST_CASE("zero-variance conventions") {
  const auto same = stats::paired_ttest({3.0, 3.0, 3.0}, {3.0, 3.0, 3.0});
  CHECK(same.zero_variance);
  CHECK(same.p == doctest::Approx(1.0));

  // constant nonzero difference: means differ, no variance
  const auto diff = stats::paired_ttest({4.0, 5.0, 6.0}, {3.0, 4.0, 5.0});
  CHECK(diff.zero_variance);
  CHECK(diff.p == doctest::Approx(0.0));

  const auto u = stats::unpaired_ttest({2.0, 2.0}, {2.0, 2.0});
  CHECK(u.zero_variance);
  CHECK(u.p == doctest::Approx(1.0));
  const auto u2 = stats::unpaired_ttest({2.0, 2.0}, {5.0, 5.0});
  CHECK(u2.zero_variance);
  CHECK(u2.p == doctest::Approx(0.0));
}

TEST_CASE("significance stars") {
  CHECK(stats::significance_stars(0.005) == "**");
  CHECK(stats::significance_stars(0.02) == "*");
  CHECK(stats::significance_stars(0.2) == "");
  CHECK(stats::significance_stars(0.05) == "");
  CHECK(stats::significance_stars(0.01) == "*");
}

TEST_CASE("published per-language deltas average to the frozen value") {
  const std::vector<double> deltas = {18.2, 27.0, 23.8, 20.5};
  CHECK(std::fabs(stats::mean(deltas) - 22.4) <= 0.05);
  CHECK(std::fabs(stats::sample_sd(deltas) - 3.8) <= 0.1);
}

TEST_CASE("results matrix build, lookup, missing cells") {
  CellKey tok{"transitivity", "token", "FMV", "bas"};
  CellKey typ{"transitivity", "type", "FMV", "bas"};
  const auto m = stats::build_results({
      {"hr", {{tok, Cell{55.9, 79.7}}, {typ, Cell{55.9, 74.1}}}},
      {"da", {{tok, Cell{60.0, 78.2}}}},  // typ missing for da
  });
  CHECK(m.languages == std::vector<std::string>{"hr", "da"});
  REQUIRE(m.columns.size() == 2);
  REQUIRE(m.find("hr", tok) != nullptr);
  CHECK(m.find("hr", tok)->delta() == doctest::Approx(23.8));
  CHECK(m.find("da", typ) == nullptr);
  CHECK(m.has_missing());
  CHECK(m.column_deltas(tok).has_value());
  CHECK(!m.column_deltas(typ).has_value());

  const std::string tsv = stats::render(m, stats::RenderFormat::tsv);
  CHECK(tsv.find("23.8") != std::string::npos);
  CHECK(tsv.find("-") != std::string::npos);  // missing cell marker
}

TEST_CASE("render: md and tsv carry the same numbers; sd needs >1 language") {
  CellKey k1{"transitivity", "token", "FMV", "bas"};
  CellKey k2{"agreement", "token", "FMV", "bas"};
  const auto m = stats::build_results({
      {"hr", {{k1, Cell{50.0, 73.8}}, {k2, Cell{61.0, 82.5}}}},
      {"da", {{k1, Cell{52.0, 70.2}}, {k2, Cell{63.0, 80.0}}}},
      {"nl", {{k1, Cell{48.0, 75.5}}, {k2, Cell{60.5, 84.0}}}},
  });
  const std::string tsv = stats::render(m, stats::RenderFormat::tsv);
  const std::string md = stats::render(m, stats::RenderFormat::md);
  for (const std::string num :
       {"23.8", "18.2", "27.5", "21.5", "17.0", "23.5", "av", "sd"}) {
    CHECK(tsv.find(num) != std::string::npos);
    CHECK(md.find(num) != std::string::npos);
  }

  const auto single = stats::build_results({
      {"hr", {{k1, Cell{50.0, 73.8}}}},
  });
  const std::string stsv = stats::render(single, stats::RenderFormat::tsv);
  CHECK(stsv.find("av") != std::string::npos);
  CHECK(stsv.find("sd") == std::string::npos);
}

TEST_CASE("ttest input validation") {
  CHECK_THROWS_AS(stats::paired_ttest({1.0, 2.0}, {1.0}),
                  numeric::UsageError);
  CHECK_THROWS_AS(stats::paired_ttest({1.0}, {2.0}), numeric::UsageError);
  CHECK_THROWS_AS(stats::unpaired_ttest({1.0}, {2.0, 3.0}),
                  numeric::UsageError);
}
