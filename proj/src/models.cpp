#include "splicegan/models.hpp"

#include "splicegan/errors.hpp"

namespace splicegan {

GeneratorSpec GeneratorSpec::full() {
  GeneratorSpec spec;
  spec.encoder_widths = {64, 128, 256, 512, 512, 512, 512, 512};
  spec.decoder_widths = {512, 512, 512, 512, 256, 128, 64};
  return spec;
}

GeneratorSpec GeneratorSpec::tiny() {
  GeneratorSpec spec;
  spec.encoder_widths = {8, 16, 32, 64, 64, 64, 64, 64};
  spec.decoder_widths = {64, 64, 64, 64, 32, 16, 8};
  return spec;
}

void GeneratorSpec::validate() const {
  if (encoder_widths.size() != 8)
    throw ConfigError("generator needs exactly 8 encoder stages");
  if (decoder_widths.size() != 7)
    throw ConfigError("generator needs exactly 8 decoder stages (7 widths + output)");
  if (in_channels <= 0 || out_channels <= 0) throw ConfigError("bad generator channel counts");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout_p must be in [0, 1)");
  if (dropout_stages < 0 || dropout_stages > 7)
    throw ConfigError("dropout_stages must be in [0, 7]");
  if (input_size < 256 || input_size % 256 != 0)
    throw ConfigError("input_size must be divisible by 2^8 so 8 halvings stay integral");
}

int GeneratorSpec::encoder_stage_input_channels(int stage) const {
  return stage == 0 ? in_channels : encoder_widths[static_cast<size_t>(stage - 1)];
}

int GeneratorSpec::decoder_stage_input_channels(int stage) const {
  // Stage 0 consumes the bottleneck; later stages consume the previous
  // up-conv output concatenated with the mirrored encoder activation.
  if (stage == 0) return encoder_widths.back();
  return decoder_widths[static_cast<size_t>(stage - 1)] +
         encoder_widths[static_cast<size_t>(7 - stage)];
}

DiscriminatorSpec DiscriminatorSpec::full() { return DiscriminatorSpec{}; }

DiscriminatorSpec DiscriminatorSpec::tiny() {
  DiscriminatorSpec spec;
  spec.widths = {8, 16, 32, 64, 1};
  return spec;
}

void DiscriminatorSpec::validate() const {
  if (widths.empty() || widths.size() != strides.size())
    throw ConfigError("discriminator widths/strides size mismatch");
  if (widths.back() != 1) throw ConfigError("discriminator must end in a 1-channel score map");
  if (kernel <= 0 || pad < 0) throw ConfigError("bad discriminator kernel/pad");
}

int DiscriminatorSpec::stage_input_channels(int stage) const {
  return stage == 0 ? image_channels + mask_channels
                    : widths[static_cast<size_t>(stage - 1)];
}

int DiscriminatorSpec::output_grid_size() const {
  int size = input_size;
  for (int stride : strides) size = nn::conv_out_size(size, kernel, stride, pad);
  return size;
}

namespace {

void add_conv_shapes(ParamShapes& shapes, const std::string& prefix, int in_ch, int out_ch,
                     int kernel, bool transposed, bool norm) {
  shapes.emplace_back(prefix + ".w",
                      transposed ? std::vector<int>{in_ch, out_ch, kernel, kernel}
                                 : std::vector<int>{out_ch, in_ch, kernel, kernel});
  shapes.emplace_back(prefix + ".b", std::vector<int>{out_ch});
  if (norm) {
    shapes.emplace_back(prefix + ".gamma", std::vector<int>{out_ch});
    shapes.emplace_back(prefix + ".beta", std::vector<int>{out_ch});
  }
}

}  // namespace

ParamShapes generator_param_shapes(const GeneratorSpec& spec) {
  ParamShapes shapes;
  const int n_enc = static_cast<int>(spec.encoder_widths.size());
  for (int i = 0; i < n_enc; ++i) {
    const bool norm = i > 0 && i < n_enc - 1;
    add_conv_shapes(shapes, "enc" + std::to_string(i + 1),
                    spec.encoder_stage_input_channels(i),
                    spec.encoder_widths[static_cast<size_t>(i)], 4, false, norm);
  }
  if (n_enc == 0) return shapes;
  const int n_dec = static_cast<int>(spec.decoder_widths.size()) + 1;
  for (int j = 0; j < n_dec; ++j) {
    const bool last = j == n_dec - 1;
    const int out = last ? spec.out_channels : spec.decoder_widths[static_cast<size_t>(j)];
    add_conv_shapes(shapes, "dec" + std::to_string(j + 1),
                    spec.decoder_stage_input_channels(j), out, 4, true, !last);
  }
  return shapes;
}

ParamShapes discriminator_param_shapes(const DiscriminatorSpec& spec) {
  ParamShapes shapes;
  const int n = static_cast<int>(spec.widths.size());
  for (int t = 0; t < n; ++t) {
    const bool norm = t > 0 && t < n - 1;
    add_conv_shapes(shapes, "d" + std::to_string(t + 1), spec.stage_input_channels(t),
                    spec.widths[static_cast<size_t>(t)], spec.kernel, false, norm);
  }
  return shapes;
}

int receptive_field(const DiscriminatorSpec& spec) {
  // Fold from the output backward: r_{i-1} = r_i * s_i + (k_i - s_i).
  int rf = 1;
  for (auto it = spec.strides.rbegin(); it != spec.strides.rend(); ++it)
    rf = rf * *it + (spec.kernel - *it);
  return rf;
}

}  // namespace splicegan
