#pragma once

#include "tlas/problems/pinn.hpp"

namespace tlas {

/// Reference solution on a tensor grid of `n` x `n` points covering the
/// closed domain box. Row k = i * n + j holds coordinate 0 at index i and
/// coordinate 1 at index j.
struct ReferenceSolution {
  Index n = 0;
  Matrix points;
  Vector values;
};

Matrix tensor_grid(const std::vector<double>& lower, const std::vector<double>& upper, Index n);

/// Burgers by the Cole-Hopf integral (trapezoid in the heat-kernel variable,
/// log-sum-exp weights).
double burgers_cole_hopf(double t, double x, double nu, double dz = 0.02);

/// Reference for a PINN problem on an n x n grid. Results are cached per
/// (kind, n, constants) for the life of the process.
const ReferenceSolution& pinn_reference(const PinnProblem& problem, Index n = 256);

ReferenceSolution burgers_reference(const PinnConstants& c, Index n);
/// Central differences on a grid refined `refine` times, solved by sparse LU.
ReferenceSolution da_reference(const PinnConstants& c, Index n, Index refine = 2);
/// Method of lines on a grid refined `refine` times, classical RK4 in time.
ReferenceSolution ac_reference(const PinnConstants& c, Index n, Index refine = 8);

/// ||pred - ref|| / ||pred|| over a common grid.
double relative_l2_error(const Vector& pred, const Vector& ref);

}  // namespace tlas
