#include "ambiprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "ambiprobe/numeric.hpp"

namespace ambiprobe::stats {

Matrix Matrix::from_columns(const std::vector<std::span<const double>>& columns) {
  if (columns.empty()) return Matrix();
  const std::size_t n = columns.front().size();
  Matrix m(n, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) throw ArgumentError("design columns differ in length");
    for (std::size_t r = 0; r < n; ++r) m(r, c) = columns[c][r];
  }
  return m;
}

Matrix Matrix::with_intercept(const std::vector<std::span<const double>>& columns) {
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  if (columns.empty()) throw ArgumentError("with_intercept needs at least one column");
  Matrix m(n, columns.size() + 1);
  for (std::size_t r = 0; r < n; ++r) m(r, 0) = 1.0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != n) throw ArgumentError("design columns differ in length");
    for (std::size_t r = 0; r < n; ++r) m(r, c + 1) = columns[c][r];
  }
  return m;
}

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ArgumentError("sequences differ in length (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
  }
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

struct QrSolution {
  std::vector<double> coefficients;
  std::vector<double> r;  // k x k upper triangle, row-major
};

constexpr double kSingularTolerance = 1e-12;

// Householder QR least squares on a copy of the (optionally row-weighted)
// design. Column j is declared dependent when its norm after projecting out
// columns 0..j-1 drops below kSingularTolerance times its original norm.
QrSolution householder_solve(const Matrix& design, std::span<const double> y,
                             std::span<const double> row_weights = {}) {
  const std::size_t n = design.rows();
  const std::size_t k = design.cols();
  // Column-major working copy.
  std::vector<double> a(n * k);
  std::vector<double> b(y.begin(), y.end());
  for (std::size_t r = 0; r < n; ++r) {
    const double w = row_weights.empty() ? 1.0 : row_weights[r];
    for (std::size_t c = 0; c < k; ++c) a[c * n + r] = w * design(r, c);
    b[r] *= w;
  }
  std::vector<double> original_norm(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += a[c * n + r] * a[c * n + r];
    original_norm[c] = std::sqrt(s);
  }

  std::vector<double> diag(k);
  for (std::size_t j = 0; j < k; ++j) {
    double* col = &a[j * n];
    double norm_sq = 0.0;
    for (std::size_t r = j; r < n; ++r) norm_sq += col[r] * col[r];
    const double norm = std::sqrt(norm_sq);
    if (original_norm[j] == 0.0 || norm <= kSingularTolerance * original_norm[j]) {
      throw SingularError(j);
    }
    const double alpha = col[j] > 0 ? -norm : norm;
    // v = x - alpha e1, stored in place of the column below the diagonal.
    col[j] -= alpha;
    double v_sq = 0.0;
    for (std::size_t r = j; r < n; ++r) v_sq += col[r] * col[r];
    const double beta = 2.0 / v_sq;
    auto reflect = [&](double* target) {
      double dot = 0.0;
      for (std::size_t r = j; r < n; ++r) dot += col[r] * target[r];
      dot *= beta;
      for (std::size_t r = j; r < n; ++r) target[r] -= dot * col[r];
    };
    for (std::size_t c = j + 1; c < k; ++c) reflect(&a[c * n]);
    reflect(b.data());
    diag[j] = alpha;
  }

  QrSolution out;
  out.r.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    out.r[i * k + i] = diag[i];
    for (std::size_t c = i + 1; c < k; ++c) out.r[i * k + c] = a[c * n + i];
  }
  out.coefficients.assign(k, 0.0);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t c = ii + 1; c < k; ++c) s -= out.r[ii * k + c] * out.coefficients[c];
    out.coefficients[ii] = s / out.r[ii * k + ii];
  }
  return out;
}

// diag((R^T R)^{-1}) via explicit inversion of the small triangle.
std::vector<double> inverse_gram_diagonal(const std::vector<double>& r, std::size_t k) {
  std::vector<double> inv(k * k, 0.0);
  for (std::size_t col = 0; col < k; ++col) {
    for (std::size_t ii = k; ii-- > 0;) {
      double s = ii == col ? 1.0 : 0.0;
      for (std::size_t c = ii + 1; c < k; ++c) s -= r[ii * k + c] * inv[c * k + col];
      inv[ii * k + col] = s / r[ii * k + ii];
    }
  }
  std::vector<double> d(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) d[i] += inv[i * k + j] * inv[i * k + j];
  }
  return d;
}

std::vector<double> multiply(const Matrix& x, std::span<const double> beta) {
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    KahanSum s;
    for (std::size_t c = 0; c < x.cols(); ++c) s.add(x(r, c) * beta[c]);
    out[r] = s.value();
  }
  return out;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

double bernoulli_log_likelihood(std::span<const double> y, std::span<const double> eta) {
  KahanSum ll;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ll.add(y[i] > 0.5 ? -softplus(-eta[i]) : -softplus(eta[i]));
  }
  return ll.value();
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  if (x.size() < 3) {
    throw UndefinedCorrelation("correlation needs at least 3 observations, got " +
                               std::to_string(x.size()));
  }
  if (is_constant(x) || is_constant(y)) {
    throw UndefinedCorrelation("correlation undefined for constant input");
  }
  const double mx = mean(x);
  const double my = mean(y);
  KahanSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return std::clamp(r, -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

FitSummary ols_fit(const Matrix& design, std::span<const double> y) {
  const std::size_t n = design.rows();
  const std::size_t k = design.cols();
  if (y.size() != n) throw ArgumentError("response length does not match design rows");
  if (k == 0) throw ArgumentError("design has no columns");
  if (n < k) {
    throw ArgumentError("ols_fit needs at least as many observations (" +
                        std::to_string(n) + ") as coefficients (" +
                        std::to_string(k) + ")");
  }
  const auto qr = householder_solve(design, y);

  FitSummary fit;
  fit.kind = FitKind::Linear;
  fit.coefficients = qr.coefficients;
  fit.n = n;
  fit.k = k + 1;
  fit.fitted = multiply(design, fit.coefficients);
  fit.residuals.resize(n);
  KahanSum ssr;
  for (std::size_t i = 0; i < n; ++i) {
    fit.residuals[i] = y[i] - fit.fitted[i];
    ssr.add(fit.residuals[i] * fit.residuals[i]);
  }
  const double my = mean(y);
  KahanSum sst;
  for (double v : y) sst.add((v - my) * (v - my));

  const double nd = static_cast<double>(n);
  if (ssr.value() > 0.0) {
    const double sigma2 = ssr.value() / nd;
    fit.log_likelihood = -0.5 * nd * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
  } else {
    fit.log_likelihood = std::numeric_limits<double>::infinity();
  }
  fit.aic = 2.0 * static_cast<double>(fit.k) - 2.0 * fit.log_likelihood;
  if (sst.value() > 0.0) fit.r_squared = 1.0 - ssr.value() / sst.value();

  if (n > k) {
    const double s2 = ssr.value() / static_cast<double>(n - k);
    const auto d = inverse_gram_diagonal(qr.r, k);
    fit.standard_errors.resize(k);
    for (std::size_t i = 0; i < k; ++i) fit.standard_errors[i] = std::sqrt(s2 * d[i]);
  }
  return fit;
}

FitSummary logistic_fit(const Matrix& design, std::span<const double> y) {
  const std::size_t n = design.rows();
  const std::size_t k = design.cols();
  if (y.size() != n) throw ArgumentError("response length does not match design rows");
  if (n <= k) throw ArgumentError("logistic_fit needs more observations than coefficients");
  std::size_t ones = 0;
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw ArgumentError("logistic response must be 0/1");
    ones += v == 1.0 ? 1 : 0;
  }
  if (ones == 0 || ones == n) throw ArgumentError("logistic response has a single class");

  constexpr std::size_t kMaxIterations = 100;
  constexpr double kTolerance = 1e-10;
  constexpr double kSeparationMagnitude = 30.0;
  constexpr double kMinWeight = 1e-12;

  std::vector<double> beta(k, 0.0);
  std::vector<double> eta(n, 0.0);
  double ll = bernoulli_log_likelihood(y, eta);
  std::vector<double> sqrt_w(n), z(n);

  FitSummary fit;
  fit.kind = FitKind::Logistic;
  fit.converged = false;
  bool separated = false;

  std::size_t it = 0;
  while (it < kMaxIterations) {
    ++it;
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = logistic(eta[i]);
      const double w = std::max(mu * (1.0 - mu), kMinWeight);
      sqrt_w[i] = std::sqrt(w);
      z[i] = eta[i] + (y[i] - mu) / w;
    }
    std::vector<double> proposal;
    try {
      proposal = householder_solve(design, z, sqrt_w).coefficients;
    } catch (const SingularError&) {
      // Weights collapsing to zero on separated data look rank deficient.
      if (it > 1) {
        separated = true;
        break;
      }
      throw;
    }
    // Step halving guards against the rare overshoot.
    auto new_eta = multiply(design, proposal);
    double new_ll = bernoulli_log_likelihood(y, new_eta);
    for (int halvings = 0; halvings < 30 && !(new_ll >= ll - 1e-12); ++halvings) {
      for (std::size_t c = 0; c < k; ++c) proposal[c] = 0.5 * (proposal[c] + beta[c]);
      new_eta = multiply(design, proposal);
      new_ll = bernoulli_log_likelihood(y, new_eta);
    }
    double max_change = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      max_change = std::max(max_change, std::abs(proposal[c] - beta[c]));
    }
    beta = std::move(proposal);
    eta = std::move(new_eta);
    ll = new_ll;

    double max_abs = 0.0;
    for (double b : beta) max_abs = std::max(max_abs, std::abs(b));
    if (max_abs > kSeparationMagnitude && -2.0 * ll < 1e-3) {
      separated = true;
      break;
    }
    if (max_change < kTolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients = beta;
  fit.n = n;
  fit.k = k;
  fit.iterations = it;
  fit.log_likelihood = ll;
  fit.deviance = -2.0 * ll;
  fit.aic = 2.0 * static_cast<double>(k) + fit.deviance;
  fit.fitted.resize(n);
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.fitted[i] = logistic(eta[i]);
    fit.residuals[i] = y[i] - fit.fitted[i];
  }
  if (separated) {
    fit.converged = false;
    throw SeparationError(std::move(fit));
  }
  if (fit.converged) {
    // Fisher information at the MLE gives the usual Wald standard errors.
    for (std::size_t i = 0; i < n; ++i) {
      sqrt_w[i] = std::sqrt(std::max(fit.fitted[i] * (1.0 - fit.fitted[i]), kMinWeight));
    }
    try {
      const auto qr = householder_solve(design, z, sqrt_w);
      const auto d = inverse_gram_diagonal(qr.r, k);
      fit.standard_errors.resize(k);
      for (std::size_t c = 0; c < k; ++c) fit.standard_errors[c] = std::sqrt(d[c]);
    } catch (const SingularError&) {
      fit.standard_errors.clear();
    }
  }
  return fit;
}

namespace {

constexpr double kGammaEps = 1e-16;
constexpr int kGammaMaxIter = 10000;

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kGammaEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("regularized_gamma_q needs a > 0");
  if (x < 0.0 || std::isnan(x)) throw ArgumentError("regularized_gamma_q needs x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_upper_tail(double x, double df) {
  if (!(df > 0.0)) throw ArgumentError("chi-square df must be positive");
  if (x <= 0.0) return 1.0;
  return std::clamp(regularized_gamma_q(0.5 * df, 0.5 * x), 0.0, 1.0);
}

LrtResult likelihood_ratio_test(const FitSummary& full, const FitSummary& reduced) {
  if (full.n != reduced.n) {
    throw NestingError("likelihood ratio test needs fits on the same observations");
  }
  if (full.k <= reduced.k) {
    throw NestingError("full model must have more parameters than the reduced model");
  }
  if (full.log_likelihood < reduced.log_likelihood - 1e-8) {
    throw NestingError("full model fits worse than reduced model; designs are not nested");
  }
  LrtResult out;
  out.df = full.k - reduced.k;
  // Two perfect fits (both +inf) carry no evidence either way.
  const double diff = full.log_likelihood == reduced.log_likelihood
                          ? 0.0
                          : full.log_likelihood - reduced.log_likelihood;
  out.chi_square = std::max(0.0, 2.0 * diff);
  out.p_value = chi_square_upper_tail(out.chi_square, static_cast<double>(out.df));
  return out;
}

std::vector<double> residuals_of(const FitSummary& fit) {
  if (fit.kind != FitKind::Linear) {
    throw ArgumentError("residuals_of is defined for linear fits only");
  }
  return fit.residuals;
}

}  // namespace ambiprobe::stats
