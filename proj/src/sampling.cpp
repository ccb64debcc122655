#include "tissuefield/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace {

void check_bounds(double near, double far) {
  if (!std::isfinite(near) || !std::isfinite(far) || !(near < far)) {
    throw InvalidArgument("sample bounds require near < far");
  }
}

// Acklam's rational approximation refined by one Halley step.
double inverse_normal_cdf(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

std::vector<PixelCoord> feasible_patch_corners(const Image& mask, int patch) {
  if (patch < 1) throw InvalidArgument("patch size must be positive");
  if (mask.channels != 1) throw InvalidArgument("mask must be single-channel");
  const int h = mask.height;
  const int w = mask.width;
  std::vector<PixelCoord> corners;
  if (patch > h || patch > w) return corners;
  // Summed-area table of masked (tool) pixels.
  std::vector<int> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto at = [&](int r, int c) -> int& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int blocked = mask.at(r, c) < 0.5f ? 1 : 0;
      at(r + 1, c + 1) = blocked + at(r, c + 1) + at(r + 1, c) - at(r, c);
    }
  }
  for (int r = 0; r + patch <= h; ++r) {
    for (int c = 0; c + patch <= w; ++c) {
      const int blocked = at(r + patch, c + patch) - at(r, c + patch) - at(r + patch, c) + at(r, c);
      if (blocked == 0) corners.push_back({r, c});
    }
  }
  return corners;
}

std::vector<PixelCoord> sample_patches(const Image& mask, int patch, int n_patches,
                                       std::uint64_t rng_seed) {
  if (patch < 3) throw InvalidArgument("patch size must be at least 3");
  if (n_patches < 0) throw InvalidArgument("patch count must be nonnegative");
  const std::vector<PixelCoord> feasible = feasible_patch_corners(mask, patch);
  if (feasible.empty()) throw UnsatisfiableMask("no fully unmasked patch fits in the mask");
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
  std::vector<PixelCoord> out;
  out.reserve(n_patches);
  for (int i = 0; i < n_patches; ++i) out.push_back(feasible[pick(rng)]);
  return out;
}

void make_strictly_increasing(std::vector<double>& s, double near, double far) {
  std::sort(s.begin(), s.end());
  if (s.empty()) return;
  const double gap = 1e-5 * (far - near);
  for (double& v : s) v = std::clamp(v, near, far);
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (s[k] <= s[k - 1]) s[k] = s[k - 1] + gap;
  }
  // Ties pushed past far are walked back from the upper bound.
  if (s.back() > far) {
    s.back() = far;
    for (std::size_t k = s.size() - 1; k-- > 0;) {
      if (s[k] >= s[k + 1]) s[k] = s[k + 1] - gap;
    }
  }
}

std::vector<double> sample_depth_guided(double d_prior, double sigma, int n_surface, int n_uniform,
                                        double near, double far, std::mt19937_64& rng) {
  check_bounds(near, far);
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (n_surface < 0 || n_uniform < 0 || n_surface + n_uniform < 2) {
    throw InvalidArgument("need at least two samples per ray");
  }
  if (!std::isfinite(d_prior)) throw InvalidArgument("depth prior must be finite");
  std::vector<double> s;
  s.reserve(n_surface + n_uniform);
  std::normal_distribution<double> normal(d_prior, sigma);
  for (int k = 0; k < n_surface; ++k) s.push_back(std::clamp(normal(rng), near, far));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double bin = (far - near) / std::max(n_uniform, 1);
  for (int k = 0; k < n_uniform; ++k) s.push_back(near + (k + unit(rng)) * bin);
  make_strictly_increasing(s, near, far);
  return s;
}

std::vector<double> sample_depth_guided(double d_prior, double sigma, int n_surface, int n_uniform,
                                        double near, double far, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return sample_depth_guided(d_prior, sigma, n_surface, n_uniform, near, far, rng);
}

std::vector<double> quantile_depth_guided(double d_prior, double sigma, int n_surface,
                                          int n_uniform, double near, double far) {
  check_bounds(near, far);
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (n_surface < 0 || n_uniform < 0 || n_surface + n_uniform < 2) {
    throw InvalidArgument("need at least two samples per ray");
  }
  std::vector<double> s;
  s.reserve(n_surface + n_uniform);
  for (int k = 0; k < n_surface; ++k) {
    const double p = (k + 0.5) / n_surface;
    s.push_back(std::clamp(d_prior + sigma * inverse_normal_cdf(p), near, far));
  }
  const double bin = (far - near) / std::max(n_uniform, 1);
  for (int k = 0; k < n_uniform; ++k) s.push_back(near + (k + 0.5) * bin);
  make_strictly_increasing(s, near, far);
  return s;
}

double annealed_sigma(double start, double end, long iter, long total) {
  if (total <= 0) return end;
  const double frac = std::clamp(static_cast<double>(iter) / static_cast<double>(total), 0.0, 1.0);
  return start * std::pow(end / start, frac);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a simple combination of the inputs.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace tissuefield
