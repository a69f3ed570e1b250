#pragma once

#include <Eigen/Dense>

#include "mzen/common.hpp"
#include "mzen/tape.hpp"

namespace mzen {

// Which feature pipeline feeds the field network. kCamp shares kIpe's
// encoding and additionally enables the pose preconditioner in the trainer.
enum class Backbone { kPlain, kBarf, kIpe, kCamp };

Backbone backbone_from_string(const std::string& s);
const char* backbone_name(Backbone b);

struct EncodingConfig {
  int levels_position = 10;  // L_x
  int levels_direction = 4;  // L_d
  int barf_start = 0;        // T_s
  int barf_end = 0;          // T_e

  void validate() const {
    if (levels_position < 1 || levels_direction < 1)
      throw usage_error("encoding: level counts must be >= 1");
    if (barf_start > barf_end) throw usage_error("encoding: barf_start must be <= barf_end");
  }
};

// Feature widths: d raw slots followed by sin/cos pairs per level, so
// d * (2L + 1) total. L_x = 10 gives 63 features, L_d = 4 gives 27.
inline int positional_width(int d, int levels) { return d * (2 * levels + 1); }
inline int integrated_width(int d, int levels) { return 2 * d * levels; }

// Layout: [p, sin(2^0 pi p), cos(2^0 pi p), ..., sin(2^{L-1} pi p), cos(2^{L-1} pi p)],
// each block of d entries in coordinate order.
Eigen::VectorXd positional_encode(const Eigen::VectorXd& p, int levels);

// Cosine ramp of the coarse-to-fine schedule: 0 before T_s, 1 after T_e.
double barf_alpha(double t, double t_start, double t_end);

// Same layout as positional_encode; raw slots and the level-0 pair stay
// unscaled, all higher bands are multiplied by barf_alpha(t).
Eigen::VectorXd barf_gated_encode(const Eigen::VectorXd& p, double t, const EncodingConfig& cfg);

// Expected sinusoids under a diagonal Gaussian: per level i the sin/cos pair
// is attenuated by exp(-2^{2i-1} sigma2). No raw slots.
Eigen::VectorXd integrated_encode(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2,
                                  int levels);

// Graph versions over row batches (B x d inputs).
ad::Var positional_encode(ad::Tape& tape, ad::Var p, int d, int levels);
ad::Var barf_gate(ad::Tape& tape, ad::Var encoded, int d, int levels, double alpha);
ad::Var integrated_encode(ad::Tape& tape, ad::Var mu, ad::Var sigma2, int d, int levels);

}  // namespace mzen
