#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {

using LMatrix = std::vector<std::vector<long double>>;

// Solves A x = b by Gauss-Jordan with partial pivoting.
std::vector<long double> solve(LMatrix a, std::vector<long double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (std::fabs(a[piv][c]) < 1e-300L) throw std::runtime_error("oracle: singular system");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

std::vector<Column> with_ones(const std::vector<Column>& x, std::size_t n) {
  std::vector<Column> cols{Column(n, 1.0)};
  cols.insert(cols.end(), x.begin(), x.end());
  return cols;
}

}  // namespace

std::vector<double> ols(const std::vector<Column>& x, const std::vector<double>& y) {
  const std::size_t n = y.size();
  const auto cols = with_ones(x, n);
  const std::size_t k = cols.size();
  LMatrix xtx(k, std::vector<long double>(k, 0.0L));
  std::vector<long double> xty(k, 0.0L);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t r = 0; r < n; ++r) {
        xtx[i][j] += static_cast<long double>(cols[i][r]) * cols[j][r];
      }
    }
    for (std::size_t r = 0; r < n; ++r) xty[i] += static_cast<long double>(cols[i][r]) * y[r];
  }
  const auto b = solve(xtx, xty);
  return {b.begin(), b.end()};
}

double gaussian_loglik(const std::vector<double>& residuals) {
  long double ssr = 0;
  for (double r : residuals) ssr += static_cast<long double>(r) * r;
  const long double n = residuals.size();
  const long double pi = 3.141592653589793238462643383279502884L;
  return static_cast<double>(-n / 2 * (std::log(2 * pi * ssr / n) + 1));
}

double logistic_loglik(const std::vector<Column>& x, const std::vector<double>& y,
                       const std::vector<double>& beta) {
  const auto cols = with_ones(x, y.size());
  long double ll = 0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    long double eta = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) eta += beta[j] * cols[j][r];
    // log p = -log(1+e^-eta), log(1-p) = -log(1+e^eta)
    ll += y[r] > 0.5 ? -std::log1p(std::exp(-eta)) : -std::log1p(std::exp(eta));
  }
  return static_cast<double>(ll);
}

std::optional<std::vector<double>> logistic(const std::vector<Column>& x,
                                            const std::vector<double>& y) {
  const std::size_t n = y.size();
  const auto cols = with_ones(x, n);
  const std::size_t k = cols.size();
  std::vector<long double> beta(k, 0.0L);
  for (int it = 0; it < 200; ++it) {
    LMatrix h(k, std::vector<long double>(k, 0.0L));
    std::vector<long double> g(k, 0.0L);
    for (std::size_t r = 0; r < n; ++r) {
      long double eta = 0;
      for (std::size_t j = 0; j < k; ++j) eta += beta[j] * cols[j][r];
      const long double p = 1 / (1 + std::exp(-eta));
      const long double w = p * (1 - p);
      for (std::size_t i = 0; i < k; ++i) {
        g[i] += (y[r] - p) * cols[i][r];
        for (std::size_t j = 0; j < k; ++j) h[i][j] += w * cols[i][r] * cols[j][r];
      }
    }
    const auto step = solve(h, g);
    long double biggest = 0;
    for (std::size_t j = 0; j < k; ++j) {
      beta[j] += step[j];
      biggest = std::max(biggest, std::fabs(step[j]));
    }
    if (biggest < 1e-13L) return std::vector<double>(beta.begin(), beta.end());
  }
  return std::nullopt;
}

double chi_square_tail(double x, int df) {
  if (x <= 0) return 1.0;
  // CDF = integral_0^x f(s) ds with s = u^2, ds = 2u du:
  //   f(s) = s^(k/2-1) e^(-s/2) / (2^(k/2) Gamma(k/2))
  //   integrand in u: 2u * u^(k-2) e^(-u^2/2) / c = 2 u^(k-1) e^(-u^2/2) / c
  const long double k = df;
  const long double c = std::pow(2.0L, k / 2) * std::tgamma(k / 2);
  auto g = [&](long double u) {
    if (u == 0) return df == 1 ? 2.0L / c : 0.0L;
    return 2 * std::pow(u, k - 1) * std::exp(-u * u / 2) / c;
  };
  const long double b = std::sqrt(static_cast<long double>(x));
  // The integrand is smooth in u, so Simpson with h <= 1e-3 is accurate far
  // beyond 1e-6.
  const int m = 2 * std::max(1, static_cast<int>(std::ceil(b / 2e-3)));
  const long double h = b / m;
  long double s = g(0) + g(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * g(i * h);
  const long double cdf = s * h / 3;
  return static_cast<double>(1 - cdf);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double cov = sxy - sx * sy / n;
  const long double vx = sxx - sx * sx / n;
  const long double vy = syy - sy * sy / n;
  return static_cast<double>(cov / std::sqrt(vx * vy));
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    // positions less+1 .. less+equal, averaged
    out[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1) / 2;
  }
  return out;
}

std::size_t word_edit_distance(const std::string& a, const std::string& b) {
  auto split = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> w;
    for (std::string t; in >> t;) w.push_back(t);
    return w;
  };
  const auto wa = split(a), wb = split(b);
  std::vector<std::vector<std::size_t>> dp(wa.size() + 1, std::vector<std::size_t>(wb.size() + 1));
  for (std::size_t i = 0; i <= wa.size(); ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= wb.size(); ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= wa.size(); ++i) {
    for (std::size_t j = 1; j <= wb.size(); ++j) {
      dp[i][j] = std::min({dp[i - 1][j] + 1, dp[i][j - 1] + 1,
                           dp[i - 1][j - 1] + (wa[i - 1] == wb[j - 1] ? 0 : 1)});
    }
  }
  return dp[wa.size()][wb.size()];
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<long double>(u[i]) * v[i];
    uu += static_cast<long double>(u[i]) * u[i];
    vv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(1 - uv / std::sqrt(uu * vv));
}

}  // namespace oracle
