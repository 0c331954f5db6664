#pragma once

#include "bicnet/core_types.hpp"
#include "bicnet/rng.hpp"

namespace bicnet::baseline {

// Kaiser varimax rotation of an N x K loading matrix.
Matrix varimax(const Matrix& loadings, int max_iter = 500, double tol = 1e-10);

// Top-K principal axes of the sample covariance of y (regions x time), scaled by
// sqrt(eigenvalue), then varimax-rotated.
Matrix pca_varimax(const Matrix& y, int K);

// Principal subspace of y with the noise floor (mean of the discarded
// eigenvalues) removed, rotated by symmetric FastICA (log-cosh contrast) on the
// whitened scores. Heavy-tailed factors make the rotation identifiable. The
// starting rotation is a random orthogonal matrix drawn from `rng`.
Matrix ica_loadings(const Matrix& y, int K, Rng& rng, int max_iter = 500, double tol = 1e-9);

// All conditions of one subject side by side.
Matrix concatenate_conditions(const Dataset& data, int s);

// Entry counts as a member when |loading| reaches `fraction` of its column's largest magnitude.
IndicatorMatrix threshold_loadings(const Matrix& loadings, double fraction = 0.2);

}  // namespace bicnet::baseline
