// Copyright 2026 The IMIL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "imil/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imil {

AugmentPolicy AugmentPolicy::strong() {
  AugmentPolicy p;
  p.kind = Kind::kStrong;
  p.crop = true;
  p.crop_scale_lo = 0.2;
  p.crop_scale_hi = 1.0;
  p.flip = true;
  p.jitter = true;
  p.grayscale = true;
  p.blur = true;
  p.rotate = true;
  return p;
}

AugmentPolicy AugmentPolicy::weak() {
  AugmentPolicy p;
  p.kind = Kind::kWeak;
  p.crop = true;
  p.crop_scale_lo = 0.8;
  p.crop_scale_hi = 1.0;
  p.flip = true;
  p.vec_rescale = false;
  return p;
}

AugmentPolicy AugmentPolicy::none() {
  AugmentPolicy p;
  p.kind = Kind::kNone;
  p.vec_sigma = 0.0;
  p.vec_rescale = false;
  return p;
}

const std::vector<std::string>& image_transform_names() {
  static const std::vector<std::string> names{"crop",      "flip", "jitter",
                                              "grayscale", "blur", "rotate"};
  return names;
}

std::vector<std::string> AugmentPolicy::enabled_transforms() const {
  std::vector<std::string> out;
  for (const auto& name : image_transform_names())
    if (transform_enabled(name)) out.push_back(name);
  return out;
}

void AugmentPolicy::set_transform(const std::string& name, bool enabled) {
  if (name == "crop") crop = enabled;
  else if (name == "flip") flip = enabled;
  else if (name == "jitter") jitter = enabled;
  else if (name == "grayscale") grayscale = enabled;
  else if (name == "blur") blur = enabled;
  else if (name == "rotate") rotate = enabled;
  else throw std::invalid_argument("unknown transform: " + name);
}

bool AugmentPolicy::transform_enabled(const std::string& name) const {
  if (name == "crop") return crop;
  if (name == "flip") return flip;
  if (name == "jitter") return jitter;
  if (name == "grayscale") return grayscale;
  if (name == "blur") return blur;
  if (name == "rotate") return rotate;
  throw std::invalid_argument("unknown transform: " + name);
}

namespace {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Planar CHW view over a flat buffer.
struct Planes {
  double* data;
  int h, w, c;
  double* plane(int ch) { return data + static_cast<std::ptrdiff_t>(ch) * h * w; }
};

void random_resized_crop(Planes img, double scale_lo, double scale_hi,
                         CounterRng& rng, std::vector<double>& scratch) {
  const int h = img.h, w = img.w;
  const double area = rng.uniform(scale_lo, scale_hi);
  const double side = std::sqrt(area);
  const int ch = std::clamp(static_cast<int>(std::lround(h * side)), 1, h);
  const int cw = std::clamp(static_cast<int>(std::lround(w * side)), 1, w);
  const int y0 = static_cast<int>(rng.uniform_int(h - ch + 1));
  const int x0 = static_cast<int>(rng.uniform_int(w - cw + 1));
  if (ch == h && cw == w) return;  // full-size crop at origin is the identity

  scratch.resize(static_cast<std::size_t>(h) * w);
  const double sy = static_cast<double>(ch) / h;
  const double sx = static_cast<double>(cw) / w;
  for (int c = 0; c < img.c; ++c) {
    double* p = img.plane(c);
    for (int y = 0; y < h; ++y) {
      // half-pixel-center mapping into the crop window
      double src_y = (y + 0.5) * sy - 0.5;
      src_y = std::clamp(src_y, 0.0, static_cast<double>(ch - 1));
      const int iy = static_cast<int>(src_y);
      const int iy1 = std::min(iy + 1, ch - 1);
      const double fy = src_y - iy;
      const double* row0 = p + static_cast<std::ptrdiff_t>(y0 + iy) * w + x0;
      const double* row1 = p + static_cast<std::ptrdiff_t>(y0 + iy1) * w + x0;
      double* out = scratch.data() + static_cast<std::ptrdiff_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double src_x = (x + 0.5) * sx - 0.5;
        src_x = std::clamp(src_x, 0.0, static_cast<double>(cw - 1));
        const int ix = static_cast<int>(src_x);
        const int ix1 = std::min(ix + 1, cw - 1);
        const double fx = src_x - ix;
        const double top = row0[ix] + (row0[ix1] - row0[ix]) * fx;
        const double bot = row1[ix] + (row1[ix1] - row1[ix]) * fx;
        out[x] = top + (bot - top) * fy;
      }
    }
    std::copy(scratch.begin(), scratch.end(), p);
  }
}

void hflip(Planes img) {
  for (int c = 0; c < img.c; ++c) {
    double* p = img.plane(c);
    for (int y = 0; y < img.h; ++y)
      std::reverse(p + static_cast<std::ptrdiff_t>(y) * img.w,
                   p + static_cast<std::ptrdiff_t>(y + 1) * img.w);
  }
}

// standard luma weights, written so equal channels map to themselves exactly
inline double luma(double r, double g, double b) {
  return r + 0.587 * (g - r) + 0.114 * (b - r);
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s,
                double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r) h = (g - b) / d;
  else if (mx == g) h = 2.0 + (b - r) / d;
  else h = 4.0 + (r - g) / d;
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g,
                double& b) {
  if (s <= 0.0) {
    r = g = b = v;
    return;
  }
  h = h - std::floor(h);
  const double hh = h * 6.0;
  const int i = std::min(5, static_cast<int>(hh));
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void color_jitter(Planes img, const AugmentPolicy& pol, CounterRng& rng) {
  const int n = img.h * img.w;
  const double fb = rng.uniform(pol.brightness_lo, pol.brightness_hi);
  const double fc = rng.uniform(pol.contrast_lo, pol.contrast_hi);

  if (img.c != 3) {
    // Grayscale-like payloads: brightness and contrast only.
    for (int c = 0; c < img.c; ++c) {
      double* q = img.plane(c);
      for (int i = 0; i < n; ++i) q[i] = clamp01(q[i] * fb);
    }
    double mean = 0.0;
    for (int c = 0; c < img.c; ++c) {
      const double* q = img.plane(c);
      for (int i = 0; i < n; ++i) mean += q[i];
    }
    mean /= static_cast<double>(n * img.c);
    for (int c = 0; c < img.c; ++c) {
      double* q = img.plane(c);
      for (int i = 0; i < n; ++i) q[i] = clamp01(mean + (q[i] - mean) * fc);
    }
    return;
  }

  const double fs = rng.uniform(pol.saturation_lo, pol.saturation_hi);
  const double dh = rng.uniform(-pol.hue_max, pol.hue_max);
  double* r = img.plane(0);
  double* g = img.plane(1);
  double* b = img.plane(2);

  for (int i = 0; i < n; ++i) {
    r[i] = clamp01(r[i] * fb);
    g[i] = clamp01(g[i] * fb);
    b[i] = clamp01(b[i] * fb);
  }
  double mean_gray = 0.0;
  for (int i = 0; i < n; ++i) mean_gray += luma(r[i], g[i], b[i]);
  mean_gray /= n;
  for (int i = 0; i < n; ++i) {
    r[i] = clamp01(mean_gray + (r[i] - mean_gray) * fc);
    g[i] = clamp01(mean_gray + (g[i] - mean_gray) * fc);
    b[i] = clamp01(mean_gray + (b[i] - mean_gray) * fc);
  }
  for (int i = 0; i < n; ++i) {
    const double gy = luma(r[i], g[i], b[i]);
    r[i] = clamp01(gy + (r[i] - gy) * fs);
    g[i] = clamp01(gy + (g[i] - gy) * fs);
    b[i] = clamp01(gy + (b[i] - gy) * fs);
  }
  for (int i = 0; i < n; ++i) {
    double h, s, v;
    rgb_to_hsv(r[i], g[i], b[i], h, s, v);
    hsv_to_rgb(h + dh, s, v, r[i], g[i], b[i]);
    r[i] = clamp01(r[i]);
    g[i] = clamp01(g[i]);
    b[i] = clamp01(b[i]);
  }
}

void to_grayscale(Planes img) {
  if (img.c != 3) return;
  double* r = img.plane(0);
  double* g = img.plane(1);
  double* b = img.plane(2);
  const int n = img.h * img.w;
  for (int i = 0; i < n; ++i) {
    const double gy = luma(r[i], g[i], b[i]);
    r[i] = g[i] = b[i] = gy;
  }
}

// reflect index into [0, n): ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
inline int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

void gaussian_blur(Planes img, double sigma, std::vector<double>& scratch) {
  const int radius = static_cast<int>(std::ceil(2.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (double& v : kernel) v /= sum;

  const int h = img.h, w = img.w;
  scratch.resize(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < img.c; ++c) {
    double* p = img.plane(c);
    // horizontal
    for (int y = 0; y < h; ++y) {
      const double* row = p + static_cast<std::ptrdiff_t>(y) * w;
      double* out = scratch.data() + static_cast<std::ptrdiff_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * row[reflect(x + k, w)];
        out[x] = acc;
      }
    }
    // vertical
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] *
                 scratch[static_cast<std::ptrdiff_t>(reflect(y + k, h)) * w + x];
        p[static_cast<std::ptrdiff_t>(y) * w + x] = clamp01(acc);
      }
    }
  }
}

void rotate_right_angle(Planes img, int angle, std::vector<double>& scratch) {
  const int h = img.h, w = img.w;
  if (angle == 0) return;
  scratch.resize(static_cast<std::size_t>(h) * w);
  for (int c = 0; c < img.c; ++c) {
    double* p = img.plane(c);
    std::copy(p, p + static_cast<std::ptrdiff_t>(h) * w, scratch.begin());
    const double* src = scratch.data();
    if (angle == 180) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          p[static_cast<std::ptrdiff_t>(y) * w + x] =
              src[static_cast<std::ptrdiff_t>(h - 1 - y) * w + (w - 1 - x)];
    } else if (angle == 90) {
      // counter-clockwise; requires h == w
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          p[static_cast<std::ptrdiff_t>(y) * w + x] =
              src[static_cast<std::ptrdiff_t>(x) * w + (w - 1 - y)];
    } else if (angle == 270) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          p[static_cast<std::ptrdiff_t>(y) * w + x] =
              src[static_cast<std::ptrdiff_t>(h - 1 - x) * w + y];
    }
  }
}

VecX augment_image(const VecX& payload, const PayloadShape& shape,
                   const AugmentPolicy& pol, CounterRng& rng) {
  VecX out = payload;
  Planes img{out.data(), shape.height, shape.width, shape.channels};
  thread_local std::vector<double> scratch;

  if (pol.crop)
    random_resized_crop(img, pol.crop_scale_lo, pol.crop_scale_hi, rng,
                        scratch);
  if (pol.flip && rng.bernoulli(pol.flip_prob)) hflip(img);
  if (pol.jitter && rng.bernoulli(pol.jitter_prob)) color_jitter(img, pol, rng);
  if (pol.grayscale && rng.bernoulli(pol.grayscale_prob)) to_grayscale(img);
  if (pol.blur && rng.bernoulli(pol.blur_prob)) {
    const double sigma = rng.uniform(pol.blur_sigma_lo, pol.blur_sigma_hi);
    gaussian_blur(img, sigma, scratch);
  }
  if (pol.rotate && rng.bernoulli(pol.rotate_prob)) {
    std::vector<int> angles;
    for (int a : pol.rotate_angles)
      if (shape.height == shape.width || a == 0 || a == 180)
        angles.push_back(a);
    if (!angles.empty()) {
      const int angle = angles[rng.uniform_int(angles.size())];
      rotate_right_angle(img, angle, scratch);
    }
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = clamp01(out(i));
  return out;
}

VecX augment_vector(const VecX& payload, const AugmentPolicy& pol,
                    CounterRng& rng) {
  VecX out = payload;
  const double sigma =
      pol.kind == AugmentPolicy::Kind::kWeak ? pol.vec_sigma / 4.0
                                             : pol.vec_sigma;
  if (sigma > 0.0)
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += sigma * rng.normal();
  if (pol.kind == AugmentPolicy::Kind::kStrong && pol.vec_rescale) {
    const int dim = static_cast<int>(out.size());
    const int signal_dims = pol.vec_signal_dims >= 0
                                ? pol.vec_signal_dims
                                : (dim + 3) / 4;
    const double factor = rng.uniform(pol.vec_rescale_lo, pol.vec_rescale_hi);
    for (int i = signal_dims; i < dim; ++i) out(i) *= factor;
  }
  return out;
}

}  // namespace

VecX augment_payload(const VecX& payload, const PayloadShape& shape,
                     const AugmentPolicy& policy, std::uint64_t seed,
                     int instance_id, int step) {
  if (shape.flat_size() <= 0 || payload.size() != shape.flat_size())
    throw std::invalid_argument("augment_payload: bad payload dimensions");
  if (policy.kind == AugmentPolicy::Kind::kNone) return payload;

  CounterRng rng(seed, policy.stream, static_cast<std::uint64_t>(instance_id),
                 static_cast<std::uint64_t>(step));
  if (shape.kind == PayloadKind::kVector)
    return augment_vector(payload, policy, rng);
  return augment_image(payload, shape, policy, rng);
}

}  // namespace imil
