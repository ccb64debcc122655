#pragma once

// Image quality metrics on [0, 1] RGB images.

#include "tissuefield/image.hpp"

namespace tissuefield {

/// Reported instead of +inf for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all pixels and channels.
double psnr(const Image& a, const Image& b);

struct SsimSettings {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM over all fully contained Gaussian windows and channels.
double ssim(const Image& a, const Image& b, const SsimSettings& settings = {});

/// Direct per-window evaluation of the same statistic, for tests.
double ssim_reference(const Image& a, const Image& b, const SsimSettings& settings = {});

}  // namespace tissuefield
