#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

namespace stabeval::numeric {

/// Index-ascending pairwise summation. The split points depend only on the
/// length, so results are reproducible regardless of threading.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);

/// log((1/n) sum exp(v_i)) with max subtraction.
double log_mean_exp(std::span<const double> values);

struct GoldenResult {
  double argmax;
  double value;
  int iterations;
};

/// Golden-section maximization of a unimodal function on [lo, hi]. Stops
/// when the bracket is narrower than tol * max(1, |x|). on_iteration, if
/// set, receives (iteration, best x, best value) once per iteration.
GoldenResult golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                double tol,
                                const std::function<void(int, double, double)>& on_iteration = {});

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks;
/// each index is visited exactly once. threads <= 1 runs inline.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned default_thread_count();

/// Shortest decimal string that parses back to the same double.
std::string shortest(double value);
/// Fixed 17-significant-digit representation.
std::string digits17(double value);

/// Parses a full-string decimal double; false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace stabeval::numeric
