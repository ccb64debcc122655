#include "tissuefield/metrics.hpp"

#include <cmath>
#include <vector>

#include "tissuefield/errors.hpp"

namespace tissuefield {

namespace {

void check_pair(const Image& a, const Image& b) {
  if (!a.same_shape(b) || a.empty()) throw InvalidArgument("metric inputs must be non-empty and equal in shape");
}

std::vector<double> gaussian_kernel(const SsimSettings& s) {
  std::vector<double> k(s.window);
  const double half = (s.window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < s.window; ++i) {
    const double x = i - half;
    k[i] = std::exp(-x * x / (2.0 * s.sigma * s.sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

double ssim_value(double mu_a, double mu_b, double var_a, double var_b, double cov, double c1, double c2) {
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

void check_window(const Image& a, const SsimSettings& s) {
  if (s.window < 1 || s.window % 2 == 0) throw InvalidArgument("SSIM window must be odd");
  if (a.width < s.window || a.height < s.window) throw InvalidArgument("image smaller than SSIM window");
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_pair(a, b);
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b, const SsimSettings& s) {
  check_pair(a, b);
  check_window(a, s);
  const std::vector<double> k = gaussian_kernel(s);
  const double c1 = s.k1 * s.k1, c2 = s.k2 * s.k2;
  const int w = a.width, h = a.height, win = s.window;
  const int ow = w - win + 1, oh = h - win + 1;
  double total = 0.0;
  // Separable filtering of the five moment images per channel.
  for (int ch = 0; ch < a.channels; ++ch) {
    std::vector<double> rows(5 * static_cast<std::size_t>(h) * ow);
    auto at = [&](int m, int r, int c) -> double& { return rows[(static_cast<std::size_t>(m) * h + r) * ow + c]; };
#pragma omp parallel for schedule(static)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < ow; ++c) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int i = 0; i < win; ++i) {
          const double x = a.at(r, c + i, ch), y = b.at(r, c + i, ch);
          m[0] += k[i] * x;
          m[1] += k[i] * y;
          m[2] += k[i] * x * x;
          m[3] += k[i] * y * y;
          m[4] += k[i] * x * y;
        }
        for (int j = 0; j < 5; ++j) at(j, r, c) = m[j];
      }
    }
    double channel = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : channel)
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        double m[5] = {0, 0, 0, 0, 0};
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < 5; ++j) m[j] += k[i] * at(j, r + i, c);
        }
        channel += ssim_value(m[0], m[1], m[2] - m[0] * m[0], m[3] - m[1] * m[1], m[4] - m[0] * m[1], c1, c2);
      }
    }
    total += channel;
  }
  return total / (static_cast<double>(ow) * oh * a.channels);
}

double ssim_reference(const Image& a, const Image& b, const SsimSettings& s) {
  check_pair(a, b);
  check_window(a, s);
  const std::vector<double> k = gaussian_kernel(s);
  const double c1 = s.k1 * s.k1, c2 = s.k2 * s.k2;
  const int win = s.window;
  const int ow = a.width - win + 1, oh = a.height - win + 1;
  double total = 0.0;
  for (int ch = 0; ch < a.channels; ++ch) {
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c) {
        double mu_a = 0, mu_b = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double g = k[i] * k[j];
            mu_a += g * a.at(r + i, c + j, ch);
            mu_b += g * b.at(r + i, c + j, ch);
          }
        }
        double var_a = 0, var_b = 0, cov = 0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double g = k[i] * k[j];
            const double da = a.at(r + i, c + j, ch) - mu_a, db = b.at(r + i, c + j, ch) - mu_b;
            var_a += g * da * da;
            var_b += g * db * db;
            cov += g * da * db;
          }
        }
        total += ssim_value(mu_a, mu_b, var_a, var_b, cov, c1, c2);
      }
    }
  }
  return total / (static_cast<double>(ow) * oh * a.channels);
}

}  // namespace tissuefield
