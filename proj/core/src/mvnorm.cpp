#include "psprs/mvnorm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "psprs/distributions.hpp"
#include "psprs/error.hpp"

namespace psprs {

MvnSpec::MvnSpec(Vector mean, Matrix covariance) : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size()) throw InputError("MvnSpec: mean and covariance dimensions differ");
  require_symmetric(covariance_, 1e-12, "MvnSpec");
  if ((covariance_.diagonal().array() < 0.0).any()) throw InputError("MvnSpec: negative variance");
  try {
    chol_ = cholesky_psd(covariance_);
  } catch (const FactorizationError& e) {
    throw FactorizationError(std::string("MvnSpec: covariance factorization failed: ") + e.what(), e.pivot());
  }
}

Matrix sample_mvn(const MvnSpec& spec, std::size_t n, RngStream& rng) {
  if (n == 0) throw InputError("sample_mvn: n must be positive");
  const Eigen::Index k = spec.dim();
  Matrix out(static_cast<Eigen::Index>(n), k);
  Vector z(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.normal();
    out.row(static_cast<Eigen::Index>(r)) = (spec.mean() + spec.chol().triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

namespace {

constexpr std::array<int, 32> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
                                         59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

// Inverse normal that tolerates arguments at the edges of (0,1).
double safe_quantile(double u) {
  constexpr double kLo = 1e-300;
  u = std::clamp(u, kLo, 1.0 - 1e-16);
  return normal_quantile(u);
}

struct Conditioning {
  Matrix l;       // reordered lower factor
  Vector upper;   // reordered limits
};

// Cholesky with Genz-Bretz prioritisation: at each step pick the remaining
// variable with the smallest expected conditional probability.
Conditioning reorder_and_factor(const Vector& upper, Matrix c) {
  const Eigen::Index k = upper.size();
  Vector b = upper;
  Matrix l = Matrix::Zero(k, k);
  Vector y = Vector::Zero(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::Index best = i;
    double best_prob = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = i; j < k; ++j) {
      double var = c(j, j);
      double mu = 0.0;
      for (Eigen::Index q = 0; q < i; ++q) {
        var -= l(j, q) * l(j, q);
        mu += l(j, q) * y(q);
      }
      const double sd = std::sqrt(std::max(var, 0.0));
      const double prob = sd > 0 ? normal_cdf((b(j) - mu) / sd) : (b(j) >= mu ? 1.0 : 0.0);
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      std::swap(b(i), b(best));
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      l.row(i).swap(l.row(best));
    }
    double d = c(i, i);
    for (Eigen::Index q = 0; q < i; ++q) d -= l(i, q) * l(i, q);
    if (!(d > 1e-14)) throw FactorizationError("mvn_rect_upper: correlation matrix is singular", static_cast<std::size_t>(i));
    const double lii = std::sqrt(d);
    l(i, i) = lii;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      double v = c(j, i);
      for (Eigen::Index q = 0; q < i; ++q) v -= l(j, q) * l(i, q);
      l(j, i) = v / lii;
    }
    double mu = 0.0;
    for (Eigen::Index q = 0; q < i; ++q) mu += l(i, q) * y(q);
    const double bb = (b(i) - mu) / lii;
    if (std::isinf(bb)) {
      y(i) = 0.0;
    } else {
      const double phi_b = normal_cdf(bb);
      y(i) = phi_b > 1e-300 ? -normal_pdf(bb) / phi_b : bb;
    }
  }
  return {std::move(l), std::move(b)};
}

class GenzIntegrand {
 public:
  explicit GenzIntegrand(const Conditioning& cond)
      : l_(cond.l), b_(cond.upper), k_(cond.upper.size()), y_(static_cast<std::size_t>(k_)) {
    first_ = normal_cdf(b_(0) / l_(0, 0));
  }

  double operator()(const double* w) {
    double e = first_;
    double f = e;
    for (Eigen::Index i = 1; i < k_; ++i) {
      y_[static_cast<std::size_t>(i - 1)] = safe_quantile(w[i - 1] * e);
      double s = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) s += l_(i, j) * y_[static_cast<std::size_t>(j)];
      e = normal_cdf((b_(i) - s) / l_(i, i));
      f *= e;
      if (f == 0.0) break;
    }
    return f;
  }

 private:
  const Matrix& l_;
  const Vector& b_;
  Eigen::Index k_;
  double first_;
  std::vector<double> y_;
};

}  // namespace

MvnProbability mvn_rect_upper(const Vector& upper, const Matrix& corr, const MvnOptions& options, RngStream& rng) {
  const Eigen::Index k = upper.size();
  if (k == 0) throw InputError("mvn_rect_upper: empty dimension");
  if (k > 32) throw InputError("mvn_rect_upper: dimension above 32 is not supported");
  if (corr.rows() != k || corr.cols() != k) throw InputError("mvn_rect_upper: correlation size mismatch");
  if (!(options.tol > 0.0 && options.tol <= 0.01)) throw InputError("mvn_rect_upper: tol must lie in (0, 0.01]");
  if (options.shifts < 2) throw InputError("mvn_rect_upper: at least two random shifts are required");
  require_symmetric(corr, 1e-10, "mvn_rect_upper");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::fabs(corr(i, i) - 1.0) > 1e-10) throw InputError("mvn_rect_upper: correlation diagonal must be 1");
    if (std::isnan(upper(i))) throw InputError("mvn_rect_upper: NaN limit");
  }

  MvnProbability out;
  if ((upper.array() == -std::numeric_limits<double>::infinity()).any()) {
    out.value = 0.0;
    return out;
  }

  // Drop unbounded coordinates; they integrate to one.
  std::vector<Eigen::Index> finite;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isinf(upper(i))) finite.push_back(i);
  }
  if (finite.empty()) {
    out.value = 1.0;
    return out;
  }
  const auto kf = static_cast<Eigen::Index>(finite.size());
  Vector b(kf);
  Matrix c(kf, kf);
  for (Eigen::Index i = 0; i < kf; ++i) {
    b(i) = upper(finite[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < kf; ++j) c(i, j) = corr(finite[static_cast<std::size_t>(i)], finite[static_cast<std::size_t>(j)]);
  }
  if (kf == 1) {
    out.value = normal_cdf(b(0));
    return out;
  }

  auto repair = repair_correlation(c, 1e-10);
  if (repair.min_eigenvalue < -1e-6) throw InputError("mvn_rect_upper: correlation matrix is not positive semi-definite");
  out.repaired = repair.repaired;
  const Conditioning cond = reorder_and_factor(b, repair.corr);
  GenzIntegrand integrand(cond);

  const auto dims = static_cast<std::size_t>(kf - 1);
  std::vector<double> alpha(dims), shift(dims * static_cast<std::size_t>(options.shifts));
  for (std::size_t d = 0; d < dims; ++d) {
    const double r = std::sqrt(static_cast<double>(kPrimes[d]));
    alpha[d] = r - std::floor(r);
  }
  for (double& s : shift) s = rng.uniform();

  const auto m = static_cast<std::size_t>(options.shifts);
  std::vector<double> sums(m, 0.0);
  std::vector<double> w(dims), w2(dims);
  std::size_t per_shift = 0;
  std::size_t batch = 32;
  while (true) {
    for (std::size_t s = 0; s < m; ++s) {
      const double* delta = &shift[s * dims];
      double acc = 0.0;
      for (std::size_t j = per_shift + 1; j <= per_shift + batch; ++j) {
        for (std::size_t d = 0; d < dims; ++d) {
          double x = static_cast<double>(j) * alpha[d] + delta[d];
          x -= std::floor(x);
          w[d] = std::fabs(2.0 * x - 1.0);
          w2[d] = 1.0 - w[d];
        }
        acc += 0.5 * (integrand(w.data()) + integrand(w2.data()));
      }
      sums[s] += acc;
    }
    per_shift += batch;
    out.evaluations += 2 * batch * m;

    double mean = 0.0;
    for (double v : sums) mean += v / static_cast<double>(per_shift);
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double v : sums) {
      const double d = v / static_cast<double>(per_shift) - mean;
      var += d * d;
    }
    var /= static_cast<double>(m * (m - 1));
    out.value = std::clamp(mean, 0.0, 1.0);
    out.error = 3.0 * std::sqrt(var);
    if (out.error <= options.tol) break;
    if (out.evaluations >= options.max_evaluations) {
      out.converged = false;
      break;
    }
    batch = per_shift;  // double the lattice length
  }
  return out;
}

}  // namespace psprs
