#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tissuefield/camera.hpp"
#include "tissuefield/image.hpp"

namespace tissuefield {

/// Corners (top-left) of all patch positions whose pixels are all unmasked.
/// A pixel counts as unmasked when its mask value is >= 0.5.
std::vector<PixelCoord> feasible_patch_corners(const Image& mask, int patch);

/// Uniformly samples ``n_patches`` corners (with replacement) among the
/// feasible ones. Throws UnsatisfiableMask when none exists.
std::vector<PixelCoord> sample_patches(const Image& mask, int patch, int n_patches,
                                       std::uint64_t rng_seed);

/// Depth-guided sample positions along a ray: ``n_surface`` draws from
/// Normal(d_prior, sigma^2) clamped to [near, far] plus ``n_uniform``
/// stratified draws, merged and made strictly increasing.
std::vector<double> sample_depth_guided(double d_prior, double sigma, int n_surface, int n_uniform,
                                        double near, double far, std::mt19937_64& rng);
std::vector<double> sample_depth_guided(double d_prior, double sigma, int n_surface, int n_uniform,
                                        double near, double far, std::uint64_t rng_seed);

/// Noise-free variant used at render time: Gaussian quantiles at stratified
/// probability levels and bin midpoints for the uniform part.
std::vector<double> quantile_depth_guided(double d_prior, double sigma, int n_surface,
                                          int n_uniform, double near, double far);

/// Sorts in place and enforces s[k+1] > s[k] within [near, far].
void make_strictly_increasing(std::vector<double>& s, double near, double far);

/// Exponentially annealed Gaussian width for iteration ``iter`` of ``total``.
double annealed_sigma(double start, double end, long iter, long total);

/// Mixes a seed with stream indices into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace tissuefield
