#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ambiprobe/error.hpp"

namespace ambiprobe::stats {

/// Dense row-major matrix. Only what the regressions need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Builds an n x (k+1) design with a leading intercept column.
  static Matrix with_intercept(const std::vector<std::span<const double>>& columns);
  static Matrix from_columns(const std::vector<std::span<const double>>& columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class FitKind { Linear, Logistic };

struct FitSummary {
  FitKind kind = FitKind::Linear;
  std::vector<double> coefficients;     // intercept first when present
  std::vector<double> standard_errors;  // empty when not estimable
  std::size_t n = 0;
  std::size_t k = 0;                    // parameters counted by AIC
  double log_likelihood = 0.0;
  double aic = 0.0;
  std::optional<double> r_squared;      // linear fits with non-constant y
  double deviance = 0.0;                // logistic only
  std::vector<double> fitted;
  std::vector<double> residuals;        // observed - fitted, input order
  bool converged = true;
  std::size_t iterations = 0;
};

/// Raised when IRLS drives the fit to perfect separation. The partially
/// converged fit is still available for scoring.
class SeparationError : public Error {
 public:
  explicit SeparationError(FitSummary fit)
      : Error("complete separation detected in logistic fit"), fit_(std::move(fit)) {}
  const FitSummary& fit() const noexcept { return fit_; }

 private:
  FitSummary fit_;
};

struct LrtResult {
  double chi_square = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
};

/// Sample Pearson correlation. Requires equal lengths >= 3 and non-constant
/// inputs; otherwise throws ArgumentError / UndefinedCorrelation.
double pearson(std::span<const double> x, std::span<const double> y);
/// 1-based ranks; tied values share the mean of their rank block.
std::vector<double> average_ranks(std::span<const double> x);
/// Defined as pearson(average_ranks(x), average_ranks(y)).
double spearman(std::span<const double> x, std::span<const double> y);

/// Least squares via Householder QR. Gaussian log-likelihood at the MLE
/// variance; AIC counts the coefficients plus the variance. A perfect fit has
/// log-likelihood +inf. Throws SingularError naming the first dependent column.
FitSummary ols_fit(const Matrix& design, std::span<const double> y);

/// Binary logistic regression by IRLS. Stops when the largest coefficient
/// change is below 1e-10 or after 100 iterations (converged=false).
FitSummary logistic_fit(const Matrix& design, std::span<const double> y);

/// Upper tail P(X > x) of a chi-square with df degrees of freedom.
double chi_square_upper_tail(double x, double df);
/// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

LrtResult likelihood_ratio_test(const FitSummary& full, const FitSummary& reduced);

/// Observed minus fitted. Only defined for linear fits.
std::vector<double> residuals_of(const FitSummary& fit);

}  // namespace ambiprobe::stats
