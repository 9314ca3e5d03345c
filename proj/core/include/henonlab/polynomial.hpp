#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "henonlab/dynamics.hpp"

namespace henonlab {

/// (x, y) -> M (x, y) + t.
struct AffineFactor {
  Mat2 matrix;
  Point2 translation;
};

/// Triangular map (x, y) -> (alpha x + p(y), beta y + gamma); p holds the
/// coefficients of p in increasing degree.
struct ElementaryFactor {
  Complex alpha = 1.0;
  Complex beta = 1.0;
  Complex gamma = 0.0;
  std::vector<Complex> p;
};

struct HenonFactor {
  HenonParams params;
};

using MapFactor = std::variant<AffineFactor, ElementaryFactor, HenonFactor>;

/// Composition of factors; factors()[0] is applied first.
class MapWord {
 public:
  /// Throws ValidationError when empty, or an affine/elementary factor is not
  /// invertible.
  explicit MapWord(std::vector<MapFactor> factors);

  const std::vector<MapFactor>& factors() const { return factors_; }
  bool pure_henon() const;
  /// True when every factor is affine, or every factor is elementary; such
  /// words have dynamical degree one.
  bool degree_one() const;
  /// Product of the factor degrees; an upper bound for deg f.
  std::size_t degree_bound() const;

 private:
  std::vector<MapFactor> factors_;
};

int factor_degree(const MapFactor& factor);

enum class CoefficientMode {
  floating,  // complex double coefficients, relative zero threshold
  exact,     // arbitrary-precision integers; requires integral coefficients
};

struct DegreeReport {
  std::vector<int> degrees;        // deg f^1 ... deg f^n_max
  double estimate = 0.0;           // (deg f^n_max)^(1 / n_max)
  std::optional<long long> exact;  // known limit for pure Henon or degree-one words
  CoefficientMode mode = CoefficientMode::floating;
};

/// Algebraic degrees of the iterates by symbolic composition of the
/// polynomial pair. Throws ResourceError when the predicted dense term count
/// of f^n_max exceeds 10^6 and ValidationError on bad inputs (exact mode with
/// non-integral coefficients, n_max < 1).
DegreeReport dynamical_degree(const MapWord& word, int n_max,
                              CoefficientMode mode = CoefficientMode::floating);

}  // namespace henonlab
