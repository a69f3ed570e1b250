#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mzen/common.hpp"
#include "mzen/encoding.hpp"
#include "mzen/tape.hpp"

namespace mzen {

// Widths of the compact radiance-field MLP. The defaults reproduce the full
// architecture (trunk 63->192x4, heads 192->1 / 192->128, color 155->64->3);
// smaller widths keep the topology but shrink layers for fast tests.
struct FieldConfig {
  int trunk_width = 192;
  int feature_width = 128;
  int color_hidden = 64;
  EncodingConfig enc;

  int position_input_width() const { return positional_width(3, enc.levels_position); }
  int direction_input_width() const { return positional_width(3, enc.levels_direction); }
  int color_input_width() const { return feature_width + direction_input_width(); }

  static FieldConfig desk_scale() {
    FieldConfig cfg;
    cfg.trunk_width = 32;
    cfg.feature_width = 16;
    cfg.color_hidden = 16;
    return cfg;
  }
};

struct RadianceFieldParams {
  FieldConfig cfg;
  // trunk: 4 affine layers with ReLU; then density head, feature head and
  // the two color layers.
  std::vector<Eigen::MatrixXd> weights;  // input x output layout
  std::vector<Eigen::VectorXd> biases;
  static constexpr int kTrunkLayers = 4;

  int layer_count() const { return static_cast<int>(weights.size()); }
  size_t parameter_count() const;
  uint64_t hash() const;
  static const char* layer_name(int idx);
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases;
// deterministic per seed.
RadianceFieldParams init_params(const FieldConfig& cfg, uint64_t seed);

struct FieldNodes {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  const FieldConfig* cfg = nullptr;
};

FieldNodes bind_field(ad::Tape& tape, const RadianceFieldParams& params, bool learnable);

struct FieldOutput {
  ad::Var rgb;    // Bx3 in (0,1)
  ad::Var sigma;  // Bx1, >= 0
};

// x_enc: B x position_input_width, d_enc: B x direction_input_width.
FieldOutput field_forward(ad::Tape& tape, const FieldNodes& field, ad::Var x_enc, ad::Var d_enc);

// Convenience numeric forward (builds a throwaway tape with constants).
void field_forward_values(const RadianceFieldParams& params, const Eigen::MatrixXd& x_enc,
                          const Eigen::MatrixXd& d_enc, Eigen::MatrixXd* rgb,
                          Eigen::VectorXd* sigma);

// Flat little-endian float64 blob with a JSON shape header.
void save_field(const std::string& path, const RadianceFieldParams& params);
RadianceFieldParams load_field(const std::string& path);

}  // namespace mzen
