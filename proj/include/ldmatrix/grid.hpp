#pragma once

#include <vector>

#include "ldmatrix/ensemble.hpp"

namespace ldmatrix {

// Discretization of the unit sphere of the cone.
//
// d=1: a single node.
// d=2, nonnegative cone: nodes parameterized by the projective coordinate
//   u = x_0 / (x_0 + x_1) on a uniform grid over [0, 1]; piecewise-linear
//   interpolation in u.
// d=2, invertible cone: uniform angles over the projective circle [0, pi);
//   periodic piecewise-linear interpolation.
// d>=3: Halton low-discrepancy directions projected to the cone, equal
//   weights, nearest-node interpolation.
struct SphereGrid {
  Cone cone = Cone::kNonnegative;
  int dim = 1;
  NormKind norm = NormKind::kOne;
  std::vector<Vector> nodes;    // unit, canonicalized
  std::vector<double> weights;  // sums to 1
  std::vector<double> u;        // d=2 parameter values (ascending)

  struct Interp {
    int i0 = 0;
    int i1 = 0;
    double w0 = 1.0;
    double w1 = 0.0;
  };
  // Interpolation reference for a unit cone vector.
  Interp locate(const Vector& x) const;
  // Interpolates nodal values f at x.
  double interpolate(const std::vector<double>& f, const Vector& x) const;

  std::size_t size() const { return nodes.size(); }
};

// Builds a grid with `resolution` nodes (d=1 grids always have one node).
SphereGrid build_grid(const MatrixEnsemble& ens, int resolution);

}  // namespace ldmatrix
