#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace ambiprobe {

/// Left-to-right compensated (Kahan) accumulator. Every reduction that feeds
/// an emitted statistic goes through this so results do not depend on how
/// work was split across threads.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double kahan_sum(std::span<const double> xs) noexcept;
double mean(std::span<const double> xs);

/// Shortest-safe textual form: 17 significant digits, "%.17g" style.
std::string format_real(double x);
/// Empty string for nullopt.
std::string format_real(std::optional<double> x);

/// Runs body(i) for i in [0, n) on up to `threads` worker threads. Each index
/// is processed exactly once; callers write results to index-addressed slots.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace ambiprobe
