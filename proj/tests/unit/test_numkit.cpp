#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "psprs/ancova.hpp"
#include "psprs/distributions.hpp"
#include "psprs/error.hpp"
#include "psprs/linalg.hpp"
#include "psprs/rng.hpp"
#include "support.hpp"

using namespace psprs;
using psprs::testing::ks_critical_001;
using psprs::testing::ks_uniform_distance;
using psprs::testing::solve3;

namespace {

// Student t density with real df.
double t_density(double x, double df) {
  const double logc = std::lgamma(0.5 * (df + 1)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi);
  return std::exp(logc - 0.5 * (df + 1) * std::log1p(x * x / df));
}

double simpson(const std::function<double(double)>& f, double a, double b) {
  return (b - a) / 6 * (f(a) + 4 * f(0.5 * (a + b)) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, a, m);
  const double right = simpson(f, m, b);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return adaptive_simpson(f, a, m, left, tol / 2, depth - 1) + adaptive_simpson(f, m, b, right, tol / 2, depth - 1);
}

// erf by its Maclaurin series in long double; fine for |x| < 3.
long double series_erf(long double x) {
  long double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-30L) break;
  }
  return sum * 2 / std::sqrt(std::numbers::pi_v<long double>);
}

struct Raw {
  std::vector<double> y, x;
  std::vector<Arm> arm;
};

Raw random_raw(std::size_t n, RngStream& rng, double effect = 0.0) {
  Raw r;
  for (std::size_t i = 0; i < n; ++i) {
    const Arm a = i % 2 ? Arm::kTreatment : Arm::kControl;
    const double x = 2 + rng.normal();
    r.x.push_back(x);
    r.y.push_back(0.5 + 0.8 * x + (a == Arm::kTreatment ? effect : 0.0) + rng.normal());
    r.arm.push_back(a);
  }
  return r;
}

}  // namespace

TEST_SUITE("ancova") {
  TEST_CASE("matches the normal-equations solution") {
    RngStream rng(101);
    const Raw r = random_raw(30, rng, -0.4);
    const AncovaFit fit = fit_ancova(r.y, r.x, r.arm);

    std::array<std::array<double, 3>, 3> xtx{};
    std::array<double, 3> xty{};
    for (std::size_t i = 0; i < r.y.size(); ++i) {
      const double row[3] = {1.0, r.x[i], r.arm[i] == Arm::kTreatment ? 1.0 : 0.0};
      for (int a = 0; a < 3; ++a) {
        xty[a] += row[a] * r.y[i];
        for (int b = 0; b < 3; ++b) xtx[a][b] += row[a] * row[b];
      }
    }
    const auto beta = solve3(xtx, xty);
    CHECK(fit.coef_intercept == doctest::Approx(beta[0]).epsilon(1e-10));
    CHECK(fit.coef_baseline == doctest::Approx(beta[1]).epsilon(1e-10));
    CHECK(std::fabs(fit.coef_treatment - beta[2]) <= 1e-10);

    // se from sigma^2 (X'X)^-1 at the treatment entry.
    double rss = 0;
    for (std::size_t i = 0; i < r.y.size(); ++i) {
      const double pred = beta[0] + beta[1] * r.x[i] + (r.arm[i] == Arm::kTreatment ? beta[2] : 0.0);
      rss += (r.y[i] - pred) * (r.y[i] - pred);
    }
    const auto inv_col = solve3(xtx, {0.0, 0.0, 1.0});
    const double se = std::sqrt(rss / (30 - 3) * inv_col[2]);
    CHECK(std::fabs(fit.se - se) <= 1e-10);
    CHECK(fit.df == 27.0);
    CHECK(fit.p_one_sided == doctest::Approx(student_t_cdf(beta[2] / se, 27)).epsilon(1e-10));
  }

  TEST_CASE("identical arms with outcome equal to baseline give t = 0") {
    std::vector<double> x = {1, 2, 3, 4, 1, 2, 3, 4};
    std::vector<Arm> arm(8, Arm::kControl);
    for (int i = 4; i < 8; ++i) arm[i] = Arm::kTreatment;
    const AncovaFit fit = fit_ancova(x, x, arm);
    CHECK(fit.t_value == 0.0);
    CHECK(fit.p_one_sided == 0.5);
    CHECK(fit.perfect_fit);
  }

  TEST_CASE("identical noisy arms give t = 0 and p = 0.5") {
    RngStream rng(5);
    const Raw half = random_raw(20, rng);
    Raw r;
    for (int rep = 0; rep < 2; ++rep) {
      for (std::size_t i = 0; i < half.y.size(); ++i) {
        r.y.push_back(half.y[i]);
        r.x.push_back(half.x[i]);
        r.arm.push_back(rep ? Arm::kTreatment : Arm::kControl);
      }
    }
    const AncovaFit fit = fit_ancova(r.y, r.x, r.arm);
    CHECK(std::fabs(fit.t_value) < 1e-12);
    CHECK(fit.p_one_sided == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("invariant to shifting the baseline") {
    RngStream rng(7);
    Raw r = random_raw(40, rng, 0.3);
    const double t0 = fit_ancova(r.y, r.x, r.arm).t_value;
    for (double& v : r.x) v += 123.25;
    CHECK(std::fabs(fit_ancova(r.y, r.x, r.arm).t_value - t0) <= 1e-9);
  }

  TEST_CASE("perfect fit with an effect gives infinite t") {
    std::vector<double> x = {0, 1, 2, 3, 0, 1, 2, 3};
    std::vector<double> y = {0, 1, 2, 3, -1, 0, 1, 2};
    std::vector<Arm> arm = {Arm::kControl,   Arm::kControl,   Arm::kControl,   Arm::kControl,
                            Arm::kTreatment, Arm::kTreatment, Arm::kTreatment, Arm::kTreatment};
    const AncovaFit fit = fit_ancova(y, x, arm);
    CHECK(fit.perfect_fit);
    CHECK(fit.se == 0.0);
    CHECK(std::isinf(fit.t_value));
    CHECK(fit.t_value < 0);
    CHECK(fit.p_one_sided == 0.0);
  }

  TEST_CASE("input validation") {
    std::vector<double> y = {1, 2, 3}, x = {1, 2, 3};
    std::vector<Arm> arm = {Arm::kControl, Arm::kTreatment, Arm::kControl};
    CHECK_THROWS_AS(fit_ancova(y, x, arm), InputError);
    std::vector<double> y4 = {1, 2, 3, 4}, x4 = {1, 2, 3, 1};
    std::vector<Arm> one(4, Arm::kControl);
    CHECK_THROWS_AS(fit_ancova(y4, x4, one), InputError);
    std::vector<double> xc = {2, 2, 2, 2};
    std::vector<Arm> two = {Arm::kControl, Arm::kControl, Arm::kTreatment, Arm::kTreatment};
    CHECK_THROWS_AS(fit_ancova(y4, xc, two), SingularDesignError);
    std::vector<double> y3 = {1, 2, 3};
    CHECK_THROWS_AS(fit_ancova(y3, x4, two), InputError);
  }

  TEST_CASE("null p-values are uniform") {
    RngStream rng(2024);
    std::vector<double> p;
    for (int rep = 0; rep < 2000; ++rep) {
      const Raw r = random_raw(60, rng);
      p.push_back(fit_ancova(r.y, r.x, r.arm).p_one_sided);
    }
    CHECK(ks_uniform_distance(p) < ks_critical_001(p.size()));
  }

  TEST_CASE("modified degrees of freedom") {
    CHECK(obrien_df(70, 10) == doctest::Approx(69.185).epsilon(1e-14));
    CHECK(obrien_df(70, 1) == doctest::Approx(137.0).epsilon(1e-14));
    CHECK_THROWS_AS(obrien_df(70, 0), InputError);
  }
}

TEST_SUITE("distributions") {
  TEST_CASE("t CDF at zero is one half") {
    for (double df : {0.5, 1.0, 3.7, 69.185, 1e6}) CHECK(student_t_cdf(0.0, df) == 0.5);
  }

  TEST_CASE("t CDF matches quadrature of the density") {
    const double df = 69.185;
    for (double x : {-1.9949, -0.3, 0.8, 2.5, -4.0}) {
      const auto f = [df](double t) { return t_density(t, df); };
      const double a = std::min(0.0, x), b = std::max(0.0, x);
      const double mass = adaptive_simpson(f, a, b, simpson(f, a, b), 1e-15, 50);
      const double oracle = x < 0 ? 0.5 - mass : 0.5 + mass;
      CHECK(std::fabs(student_t_cdf(x, df) - oracle) <= 1e-8);
    }
  }

  TEST_CASE("t CDF approaches the normal CDF") {
    for (int x = -3; x <= 3; ++x) CHECK(std::fabs(student_t_cdf(x, 1e6) - normal_cdf(x)) < 1e-5);
  }

  TEST_CASE("t CDF is monotone and bounded") {
    for (double df : {1.0, 4.5, 69.185}) {
      double prev = 0.0;
      for (double x = -40; x <= 40; x += 0.05) {
        const double v = student_t_cdf(x, df);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
      }
    }
    CHECK(student_t_cdf(-INFINITY, 5) == 0.0);
    CHECK(student_t_cdf(INFINITY, 5) == 1.0);
  }

  TEST_CASE("t CDF rejects bad arguments") {
    CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(student_t_cdf(1.0, -2.0), DomainError);
    CHECK_THROWS_AS(student_t_cdf(NAN, 3.0), DomainError);
  }

  TEST_CASE("normal quantile at 0.975 agrees with bisection on a series erf") {
    long double lo = 0, hi = 4;
    for (int i = 0; i < 200; ++i) {
      const long double mid = 0.5L * (lo + hi);
      const long double cdf = 0.5L * (1 + series_erf(mid / std::sqrt(2.0L)));
      (cdf < 0.975L ? lo : hi) = mid;
    }
    const double oracle = static_cast<double>(lo);
    CHECK(oracle == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(std::fabs(normal_quantile(0.975) - oracle) < 1e-12);
    CHECK(normal_quantile(0.5) == 0.0);
  }

  TEST_CASE("normal quantile inverts the CDF on [-6, 6]") {
    for (int i = -600; i <= 600; ++i) {
      const double x = i / 100.0;
      CHECK(std::fabs(normal_quantile(normal_cdf(x)) - x) <= 1e-9);
    }
  }

  TEST_CASE("round-trip error stays within the resolution of the rounded CDF") {
    // Near x = 6 the double nearest Phi(x) pins x down only to about
    // ulp(Phi(x)) / (2 phi(x)); no inverse can do better than that.
    for (int i = -600; i <= 600; ++i) {
      const double x = i / 100.0;
      const double p = normal_cdf(x);
      const double resolution = 0.5 * (std::nextafter(p, 2.0) - p) / normal_pdf(x);
      CHECK(std::fabs(normal_quantile(p) - x) <= std::max(1e-9, 1.01 * resolution));
    }
  }

  TEST_CASE("normal quantile domain") {
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(-0.1), DomainError);
  }

  TEST_CASE("logit inverts logistic") {
    for (double x = -10; x <= 10; x += 0.5) CHECK(logit(logistic(x)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_SUITE("linalg") {
  TEST_CASE("cholesky of the identity") {
    const Matrix l = cholesky(Matrix::Identity(5, 5));
    CHECK((l - Matrix::Identity(5, 5)).norm() == 0.0);
  }

  TEST_CASE("cholesky by hand") {
    Matrix s(2, 2);
    s << 4, 2, 2, 3;
    const Matrix l = cholesky(s);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }

  TEST_CASE("cholesky reconstructs a random 20x20 SPD matrix") {
    RngStream rng(20);
    Matrix a(20, 20);
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) a(i, j) = rng.normal();
    const Matrix s = a * a.transpose() + 20.0 * Matrix::Identity(20, 20);
    const Matrix l = cholesky(s);
    CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-10);
    for (int i = 0; i < 20; ++i)
      for (int j = i + 1; j < 20; ++j) CHECK(l(i, j) == 0.0);
  }

  TEST_CASE("cholesky reports the failing pivot") {
    Matrix s(3, 3);
    s << 1, 0, 0, 0, 1, 1, 0, 1, 1;
    try {
      (void)cholesky(s);
      FAIL("expected FactorizationError");
    } catch (const FactorizationError& e) {
      CHECK(e.pivot() == 2);
    }
  }

  TEST_CASE("semi-definite factor keeps zero columns") {
    Matrix s(2, 2);
    s << 1, 1, 1, 1;
    const Matrix l = cholesky_psd(s);
    CHECK((l * l.transpose() - s).norm() < 1e-12);
  }

  TEST_CASE("correlation repair floors eigenvalues") {
    Matrix c(3, 3);
    c << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    const auto r = repair_correlation(c, 1e-10);
    CHECK(r.repaired);
    CHECK(r.min_eigenvalue < 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(r.corr);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    for (int i = 0; i < 3; ++i) CHECK(r.corr(i, i) == doctest::Approx(1.0));
    const auto untouched = repair_correlation(Matrix::Identity(3, 3));
    CHECK_FALSE(untouched.repaired);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("same seed gives the same first million draws") {
    RngStream a(42), b(42);
    bool same = true;
    for (int i = 0; i < 1'000'000; ++i) same = same && a.next_u64() == b.next_u64();
    CHECK(same);
  }

  TEST_CASE("uniform lies strictly inside (0, 1)") {
    RngStream rng(3);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
      const double u = rng.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("bounded integers are in range and roughly uniform") {
    RngStream rng(9);
    std::array<int, 7> counts{};
    for (int i = 0; i < 70000; ++i) {
      const auto v = rng.below(7);
      REQUIRE(v < 7);
      ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  }

  TEST_CASE("split is deterministic and independent of the parent") {
    RngStream a(1), b(1);
    RngStream ca = a.split(), cb = b.split();
    CHECK(ca.next_u64() == cb.next_u64());
    CHECK(ca.next_u64() != a.next_u64());
  }
}
