#include "splicegan/inference.hpp"

#include "splicegan/errors.hpp"

namespace splicegan {

SoftMask estimate_mask(const GeneratorSpec& spec, const ModelParamsF& gen,
                       const ImageRGB& image) {
  validate(image);
  const int net = spec.input_size;
  TensorF chw = resize_bilinear_chw(image_to_chw(image), net, net);
  TensorF batch({1, 3, net, net});
  std::copy(chw.data.begin(), chw.data.end(), batch.data.begin());
  GeneratorNet<float> net_g(spec);
  TensorF out = net_g.forward(gen, batch, /*train=*/false, nullptr, nullptr);
  TensorF out_chw({1, net, net});
  std::copy(out.data.begin(), out.data.end(), out_chw.data.begin());
  return chw_to_soft_mask(resize_bilinear_chw(out_chw, image.height, image.width));
}

SoftMask estimate_mask(const Checkpoint& checkpoint, const ImageRGB& image) {
  if (checkpoint.gen.count() == 0) throw BadCheckpointError("checkpoint has no generator");
  return estimate_mask(checkpoint.gen_spec, checkpoint.gen, image);
}

double detection_score(const SoftMask& mask) {
  if (mask.data.empty()) throw ShapeError("detection_score: empty mask");
  double sum = 0.0;
  for (float v : mask.data) sum += 255.0 * static_cast<double>(v);
  return sum / static_cast<double>(mask.data.size());
}

DetectionResult classify(double score, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 255.0))
    throw ConfigError("detection threshold must lie in [0, 255]");
  DetectionResult result;
  result.score = score;
  result.threshold = threshold;
  result.label = score < threshold ? Label::pristine : Label::forged;
  return result;
}

ForgeryMask localize(const SoftMask& mask, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("pixel threshold must lie in [0, 1]");
  ForgeryMask out;
  out.width = mask.width;
  out.height = mask.height;
  out.data.resize(mask.data.size());
  for (size_t i = 0; i < mask.data.size(); ++i)
    out.data[i] = static_cast<double>(mask.data[i]) >= tau ? 255 : 0;
  return out;
}

}  // namespace splicegan
