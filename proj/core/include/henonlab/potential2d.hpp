#pragma once

#include <cstdint>
#include <vector>

#include "henonlab/dynamics.hpp"
#include "henonlab/oracle1d.hpp"
#include "henonlab/saddles.hpp"

namespace henonlab {

enum class GreenSign { plus, minus };

/// G+ (sign plus) or G- (sign minus) with a certified truncation bound.
///
/// After the filtration certifies escape at step N with M = ||f^{+-N}(p)||:
///   plus:  value = 2^-N log M,
///   minus: value = 2^-N (log M - log|b|),
/// since the backward recursion is |y'| = |y|^2 / |b| up to a factor
/// 1 + O(1/M). The remaining factors are bounded through the telescoping
/// sum; N is advanced until the bound is at most `tol`.
GreenValue green_2d(const HenonParams& params, const Point2& p, GreenSign sign, double tol,
                    int max_iter = 100000);

struct GreenPairValue {
  GreenValue plus;
  GreenValue minus;

  /// Neither direction escaped within budget: p is taken to lie in K.
  bool in_k() const { return plus.assumed_in_k() && minus.assumed_in_k(); }
};

GreenPairValue green_pair(const HenonParams& params, const Point2& p, double tol, int max_iter = 100000);

/// Saddle periodic points standing in for the measure of maximal entropy.
/// All points carry equal weight.
struct MeasureSample2D {
  std::vector<SaddleRecord> records;
  std::vector<Point2> points;       // records[i].location
  std::vector<int> source_periods;  // records[i].period
  std::vector<int> periods;         // the requested periods, ascending
  std::vector<int> exact_counts;    // points of exact period n, per requested n
  std::vector<int> fixed_counts;    // distinct solutions of f^n = id, per requested n
  bool under_resolved = false;      // some search found fewer than 2^n solutions
};

/// Every saddle point of exact period n for n in [period_lo, period_hi],
/// from complex searches. Requires 1 <= period_lo <= period_hi <= 12.
MeasureSample2D sample_mu(const HenonParams& params, int period_lo, int period_hi, const SearchBudget& budget = {},
                          std::uint64_t seed = 0);

}  // namespace henonlab
