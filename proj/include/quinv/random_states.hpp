#pragma once

#include <cstdint>
#include <random>

#include "quinv/gauss_core.hpp"

// Seeded generators of physical Gaussian states for property tests and the
// acceptance suite.

namespace quinv {

struct RandomStateOptions {
    double max_excess = 1.0;   // nu_j - 1 drawn from Exp(1/max_excess) then clipped to 3*max_excess
    double max_squeeze = 0.5;  // single-beam squeezing parameter range [0, max_squeeze]
};

// A = S (+)nu_j I_2 S^T with nu_j >= 1 and S a product of random rotations,
// beam splitters and squeezers; physical by construction.
CovarianceMatrix random_physical_covariance(int n_beams, std::mt19937_64& rng,
                                            const RandomStateOptions& opt = {});

GaussianStateParams random_physical_params(int n_beams, std::mt19937_64& rng,
                                           const RandomStateOptions& opt = {});

// Fully beam-symmetric three-beam parameters: B_j = B, C_j = C, D_jk = D
// (complex), Dbar_jk real and equal. Rejection-sampled for physicality.
GaussianStateParams random_symmetric_params(std::mt19937_64& rng, double scale = 0.2);

}  // namespace quinv
