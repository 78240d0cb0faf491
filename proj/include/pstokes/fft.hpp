#pragma once

#include <memory>
#include <vector>

#include "pstokes/field.hpp"

namespace pstokes {

// In-box ball averages through zero-padded real-to-complex FFT convolution.
// Balls are open (|offset| < r in cell units) and denominators count in-box
// cells only, so a constant field averages back to the same constant at
// every radius and every cell. Ball counts are exact integers (rounded from
// the convolution and cached); the averages carry FFT roundoff only.
class BallAverager {
 public:
  BallAverager(Dims dims, double h);
  ~BallAverager();
  BallAverager(const BallAverager&) = delete;
  BallAverager& operator=(const BallAverager&) = delete;

  // dyadic ladder 1, 2, 4, ... capped one step past the box diameter
  const std::vector<double>& radii_cells() const;

  std::vector<ScalarField> averages(const ScalarField& g);
  std::vector<ScalarField> averages_at(const ScalarField& g,
                                       const std::vector<double>& radii_cells);

  // direct-sum path, kept as the cross-check oracle
  ScalarField average_reference(const ScalarField& g, double r_cells) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl;
};

// process-wide averager registry keyed by box shape (serial use only)
BallAverager& shared_averager(Dims dims, double h);

// Exact solve of the seven-point Laplacian with zero extension beyond the
// box: returns u with (2 sum_a (u - shifts)/h^2) ... i.e. -lap u = rhs where
// values outside the box are treated as zero. Sine transform diagonalizes
// the operator, so the residual is at rounding level.
ScalarField poisson_zero_dirichlet(const ScalarField& rhs);

}  // namespace pstokes
