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

#ifndef IMIL_AUGMENT_HPP_
#define IMIL_AUGMENT_HPP_

#include <string>
#include <vector>

#include "imil/rng.hpp"
#include "imil/types.hpp"

namespace imil {

/// One deterministic augmentation pipeline. Image transforms run in the fixed
/// order crop, flip, jitter, grayscale, blur, rotation; each one is
/// individually toggleable so ablations can remove or add a single transform.
/// The result of applying a policy to instance j at step t is a pure function
/// of (seed, stream, j, t).
struct AugmentPolicy {
  enum class Kind { kStrong, kWeak, kNone };
  Kind kind = Kind::kNone;
  Stream stream = Stream::kAugment;

  // image: random resized crop (area scale), then resize back to H x W
  bool crop = false;
  double crop_scale_lo = 0.2, crop_scale_hi = 1.0;
  // image: horizontal flip
  bool flip = false;
  double flip_prob = 0.5;
  // image: color jitter (brightness, contrast, saturation, hue in that order)
  bool jitter = false;
  double jitter_prob = 0.8;
  double brightness_lo = 0.6, brightness_hi = 1.4;
  double contrast_lo = 0.6, contrast_hi = 1.4;
  double saturation_lo = 0.6, saturation_hi = 1.4;
  double hue_max = 0.1;  // shift uniform in [-hue_max, hue_max], hue in [0,1)
  // image: grayscale conversion
  bool grayscale = false;
  double grayscale_prob = 0.2;
  // image: gaussian blur, kernel radius ceil(2*sigma), reflected boundary
  bool blur = false;
  double blur_prob = 0.5;
  double blur_sigma_lo = 0.1, blur_sigma_hi = 2.0;
  // image: right-angle rotation (90/270 only on square images)
  bool rotate = false;
  double rotate_prob = 1.0;
  std::vector<int> rotate_angles{0, 90, 180, 270};

  // vector payloads: isotropic gaussian noise, plus a random rescaling of the
  // confounder-designated coordinates [signal_dims, dim) in strong mode
  double vec_sigma = 0.1;
  bool vec_rescale = true;
  double vec_rescale_lo = 0.5, vec_rescale_hi = 1.5;
  int vec_signal_dims = -1;  // -1: ceil(dim/4), matching the generator

  static AugmentPolicy strong();
  static AugmentPolicy weak();
  static AugmentPolicy none();

  /// Names of enabled image transforms, pipeline order.
  std::vector<std::string> enabled_transforms() const;
  /// Toggle a transform by name ("crop", "flip", "jitter", "grayscale",
  /// "blur", "rotate"); throws on unknown names.
  void set_transform(const std::string& name, bool enabled);
  bool transform_enabled(const std::string& name) const;
};

/// All known image transform names in pipeline order.
const std::vector<std::string>& image_transform_names();

/// Applies the policy to one payload. Vector payloads route to the vector
/// pipeline regardless of the image toggles. Shape is preserved exactly and
/// image values stay in [0,1]. Throws on non-positive dimensions.
VecX augment_payload(const VecX& payload, const PayloadShape& shape,
                     const AugmentPolicy& policy, std::uint64_t seed,
                     int instance_id, int step);

}  // namespace imil

#endif  // IMIL_AUGMENT_HPP_
