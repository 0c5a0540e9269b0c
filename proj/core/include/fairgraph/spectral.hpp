#pragma once

#include "fairgraph/matrix.hpp"

namespace fairgraph {

// Largest singular value, estimated by power iteration on the Gram matrix.
// The start direction is seeded and fixed, so repeated calls on the same
// matrix agree bit for bit. Iteration stops after max_iters or once two
// successive estimates agree to a relative tol. An all-zero matrix has
// norm 0.
double spectral_norm(const Matrix& w, int max_iters = 50, double tol = 1e-6);

// Rescales w in place so its spectral norm is 1, using a high-accuracy
// norm estimate. Throws ValidationError for an all-zero matrix, which has
// no scale to divide out.
void lipschitz_normalize(Matrix& w);

}  // namespace fairgraph
