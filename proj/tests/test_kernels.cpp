#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "nucleus/kernels.hpp"
#include "nucleus/numeric.hpp"

using namespace nucleus;

namespace {

std::vector<double> random_vec(numeric::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// FMA reorders roundings, so equivalence is relative, not bitwise.
void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double rel = 1e-12) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::fabs(a[i]), std::fabs(b[i])});
    CHECK(std::fabs(a[i] - b[i]) <= rel * scale);
  }
}

struct IsaGuard {
  kernels::Isa saved = kernels::active_isa();
  ~IsaGuard() { kernels::force_isa(saved); }
};

}  // namespace

TEST_CASE("scalar reference kernels on hand-computed values") {
  kernels::force_isa(kernels::Isa::scalar);
  IsaGuard guard;
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, -5.0, 6.0};
  CHECK(kernels::dot(a, b, 3) == doctest::Approx(12.0));

  double y[] = {1.0, 1.0, 1.0};
  kernels::axpy(2.0, a, y, 3);
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[1] == doctest::Approx(5.0));
  CHECK(y[2] == doctest::Approx(7.0));

  // [1 2; 3 4] * [1, -1] = [-1, -1]
  const double m[] = {1.0, 2.0, 3.0, 4.0};
  const double x[] = {1.0, -1.0};
  double out[2];
  kernels::matvec(m, x, out, 2, 2);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(-1.0));

  // y += A^T x with A = [1 2; 3 4], x = [1, 1] -> y += [4, 6]
  const double ones[] = {1.0, 1.0};
  double yt[] = {0.5, 0.5};
  kernels::matvec_t_acc(m, ones, yt, 2, 2);
  CHECK(yt[0] == doctest::Approx(4.5));
  CHECK(yt[1] == doctest::Approx(6.5));

  // A += x y^T
  double g[] = {0.0, 0.0, 0.0, 0.0};
  const double u[] = {1.0, 2.0};
  const double v[] = {3.0, 4.0};
  kernels::ger_acc(g, u, v, 2, 2);
  CHECK(g[0] == doctest::Approx(3.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(g[2] == doctest::Approx(6.0));
  CHECK(g[3] == doctest::Approx(8.0));
}

TEST_CASE("adam step matches the closed-form first update") {
  kernels::force_isa(kernels::Isa::scalar);
  IsaGuard guard;
  double w = 1.0, m = 0.0, v = 0.0;
  const double g = 0.5;
  kernels::adam_step(&w, &m, &v, &g, 1, 0.1, 0.9, 0.999, 1e-8, 1);
  // after bias correction the first step moves by ~lr * sign(g)
  const double mhat = (0.1 * g) / (1.0 - 0.9);
  const double vhat = (0.001 * g * g) / (1.0 - 0.999);
  CHECK(w == doctest::Approx(1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)));
  CHECK(m == doctest::Approx(0.05));
  CHECK(v == doctest::Approx(0.00025));
}

TEST_CASE("avx2 kernels match scalar references across sizes") {
  if (!kernels::cpu_has_avx2()) return;  // nothing to compare on this host
  IsaGuard guard;
  numeric::Rng rng(7);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 64u,
                        100u, 257u}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);

    kernels::force_isa(kernels::Isa::scalar);
    const double dot_s = kernels::dot(a.data(), b.data(), n);
    kernels::force_isa(kernels::Isa::avx2);
    const double dot_v = kernels::dot(a.data(), b.data(), n);
    CHECK(std::fabs(dot_s - dot_v) <=
          1e-12 * std::max(1.0, std::fabs(dot_s)));

    auto ys = random_vec(rng, n);
    auto yv = ys;
    kernels::force_isa(kernels::Isa::scalar);
    kernels::axpy(0.37, a.data(), ys.data(), n);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::axpy(0.37, a.data(), yv.data(), n);
    check_close(ys, yv);

    std::vector<double> os(n), ov(n);
    kernels::force_isa(kernels::Isa::scalar);
    kernels::vadd(a.data(), b.data(), os.data(), n);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::vadd(a.data(), b.data(), ov.data(), n);
    check_close(os, ov);

    kernels::force_isa(kernels::Isa::scalar);
    kernels::vmul(a.data(), b.data(), os.data(), n);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::vmul(a.data(), b.data(), ov.data(), n);
    check_close(os, ov);

    auto accs = random_vec(rng, n);
    auto accv = accs;
    kernels::force_isa(kernels::Isa::scalar);
    kernels::vmul_acc(a.data(), b.data(), accs.data(), n);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::vmul_acc(a.data(), b.data(), accv.data(), n);
    check_close(accs, accv);
  }
}

TEST_CASE("avx2 matrix kernels match scalar references") {
  if (!kernels::cpu_has_avx2()) return;
  IsaGuard guard;
  numeric::Rng rng(11);
  for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{
           {1, 1}, {3, 5}, {8, 8}, {5, 17}, {33, 12}, {125, 250}}) {
    const auto a = random_vec(rng, rows * cols);
    const auto x = random_vec(rng, cols);
    const auto xr = random_vec(rng, rows);

    std::vector<double> ys(rows), yv(rows);
    kernels::force_isa(kernels::Isa::scalar);
    kernels::matvec(a.data(), x.data(), ys.data(), rows, cols);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::matvec(a.data(), x.data(), yv.data(), rows, cols);
    check_close(ys, yv);

    auto ts = random_vec(rng, cols);
    auto tv = ts;
    kernels::force_isa(kernels::Isa::scalar);
    kernels::matvec_t_acc(a.data(), xr.data(), ts.data(), rows, cols);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::matvec_t_acc(a.data(), xr.data(), tv.data(), rows, cols);
    check_close(ts, tv);

    auto gs = a;
    auto gv = a;
    kernels::force_isa(kernels::Isa::scalar);
    kernels::ger_acc(gs.data(), xr.data(), x.data(), rows, cols);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::ger_acc(gv.data(), xr.data(), x.data(), rows, cols);
    check_close(gs, gv);
  }
}

TEST_CASE("avx2 adam matches scalar adam") {
  if (!kernels::cpu_has_avx2()) return;
  IsaGuard guard;
  numeric::Rng rng(13);
  const std::size_t n = 37;
  auto w_s = random_vec(rng, n);
  auto m_s = std::vector<double>(n, 0.0);
  auto v_s = std::vector<double>(n, 0.0);
  auto w_v = w_s;
  auto m_v = m_s;
  auto v_v = v_s;
  for (long t = 1; t <= 5; ++t) {
    const auto g = random_vec(rng, n);
    kernels::force_isa(kernels::Isa::scalar);
    kernels::adam_step(w_s.data(), m_s.data(), v_s.data(), g.data(), n, 1e-3,
                       0.9, 0.999, 1e-8, t);
    kernels::force_isa(kernels::Isa::avx2);
    kernels::adam_step(w_v.data(), m_v.data(), v_v.data(), g.data(), n, 1e-3,
                       0.9, 0.999, 1e-8, t);
  }
  check_close(w_s, w_v, 1e-10);
  check_close(m_s, m_v, 1e-10);
  check_close(v_s, v_v, 1e-10);
}

TEST_CASE("isa override reporting") {
  IsaGuard guard;
  kernels::force_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  if (kernels::cpu_has_avx2()) {
    kernels::force_isa(kernels::Isa::avx2);
    CHECK(kernels::active_isa() == kernels::Isa::avx2);
  }
}
