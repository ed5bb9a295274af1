#pragma once

#include "splicegan/checkpoint.hpp"
#include "splicegan/image.hpp"

namespace splicegan {

// Resizes the image to the network resolution, runs the generator in infer
// mode (deterministic, dropout off) and resizes the estimate back to the
// source resolution with bilinear interpolation.
SoftMask estimate_mask(const GeneratorSpec& spec, const ModelParamsF& gen,
                       const ImageRGB& image);
SoftMask estimate_mask(const Checkpoint& checkpoint, const ImageRGB& image);

// Mask-estimate average on the 0..255 pixel-value scale: internal [0,1] masks
// are scaled only at this boundary so thresholds stay comparable with the
// on-disk mask convention.
double detection_score(const SoftMask& mask);

// Pristine iff score < threshold; a score exactly equal to the threshold is
// classified forged. threshold must lie in [0, 255].
DetectionResult classify(double score, double threshold);

// output(x, y) = 255 iff mask(x, y) >= tau, with tau in [0, 1].
ForgeryMask localize(const SoftMask& mask, double tau);

}  // namespace splicegan
