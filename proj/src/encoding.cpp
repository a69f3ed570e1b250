#include "mzen/encoding.hpp"

#include <cmath>
#include <vector>

namespace mzen {

Backbone backbone_from_string(const std::string& s) {
  if (s == "plain") return Backbone::kPlain;
  if (s == "barf") return Backbone::kBarf;
  if (s == "ipe") return Backbone::kIpe;
  if (s == "camp") return Backbone::kCamp;
  throw usage_error("unknown backbone '" + s + "' (expected plain|barf|ipe|camp)");
}

const char* backbone_name(Backbone b) {
  switch (b) {
    case Backbone::kPlain: return "plain";
    case Backbone::kBarf: return "barf";
    case Backbone::kIpe: return "ipe";
    case Backbone::kCamp: return "camp";
  }
  return "?";
}

Eigen::VectorXd positional_encode(const Eigen::VectorXd& p, int levels) {
  const auto d = p.size();
  Eigen::VectorXd out(positional_width(static_cast<int>(d), levels));
  out.head(d) = p;
  for (int i = 0; i < levels; ++i) {
    const double freq = M_PI * std::pow(2.0, i);
    out.segment(d * (1 + 2 * i), d) = (freq * p.array()).sin();
    out.segment(d * (2 + 2 * i), d) = (freq * p.array()).cos();
  }
  return out;
}

double barf_alpha(double t, double t_start, double t_end) {
  if (t_start > t_end) throw usage_error("barf_alpha: t_start must be <= t_end");
  if (t < t_start) return 0.0;
  if (t > t_end) return 1.0;
  if (t_end == t_start) return 1.0;
  const double s = (t - t_start) / (t_end - t_start);
  return 0.5 * (1.0 - std::cos(M_PI * s));
}

Eigen::VectorXd barf_gated_encode(const Eigen::VectorXd& p, double t, const EncodingConfig& cfg) {
  cfg.validate();
  const int d = static_cast<int>(p.size());
  const int levels = cfg.levels_position;
  Eigen::VectorXd out = positional_encode(p, levels);
  const double alpha = barf_alpha(t, cfg.barf_start, cfg.barf_end);
  // Level 0 is always active; only bands >= 1 are gated.
  for (int i = 1; i < levels; ++i) out.segment(d * (1 + 2 * i), 2 * d) *= alpha;
  return out;
}

Eigen::VectorXd integrated_encode(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2,
                                  int levels) {
  if (mu.size() != sigma2.size())
    throw usage_error("integrated_encode: mu/sigma2 size mismatch");
  if ((sigma2.array() < 0.0).any())
    throw usage_error("integrated_encode: sigma2 must be non-negative");
  const auto d = mu.size();
  Eigen::VectorXd out(integrated_width(static_cast<int>(d), levels));
  for (int i = 0; i < levels; ++i) {
    const double freq = M_PI * std::pow(2.0, i);
    const double damp = std::pow(2.0, 2 * i - 1);
    const Eigen::ArrayXd atten = (-damp * sigma2.array()).exp();
    out.segment(d * (2 * i), d) = atten * (freq * mu.array()).sin();
    out.segment(d * (2 * i + 1), d) = atten * (freq * mu.array()).cos();
  }
  return out;
}

ad::Var positional_encode(ad::Tape& tape, ad::Var p, int d, int levels) {
  if (tape.value(p).cols() != d) throw usage_error("positional_encode: input width mismatch");
  std::vector<ad::Var> parts;
  parts.reserve(1 + 2 * levels);
  parts.push_back(p);
  for (int i = 0; i < levels; ++i) {
    const ad::Var phase = tape.scale(p, M_PI * std::pow(2.0, i));
    parts.push_back(tape.sin(phase));
    parts.push_back(tape.cos(phase));
  }
  return tape.hcat(parts);
}

ad::Var barf_gate(ad::Tape& tape, ad::Var encoded, int d, int levels, double alpha) {
  if (alpha >= 1.0) return encoded;
  const int width = positional_width(d, levels);
  if (tape.value(encoded).cols() != width) throw usage_error("barf_gate: encoded width mismatch");
  Eigen::RowVectorXd mask = Eigen::RowVectorXd::Ones(width);
  for (int i = 1; i < levels; ++i) mask.segment(d * (1 + 2 * i), 2 * d).setConstant(alpha);
  return tape.mul_row(encoded, tape.constant(mask));
}

ad::Var integrated_encode(ad::Tape& tape, ad::Var mu, ad::Var sigma2, int d, int levels) {
  if (tape.value(mu).cols() != d || tape.value(sigma2).cols() != d)
    throw usage_error("integrated_encode: input width mismatch");
  std::vector<ad::Var> parts;
  parts.reserve(2 * levels);
  for (int i = 0; i < levels; ++i) {
    const ad::Var atten = tape.exp(tape.scale(sigma2, -std::pow(2.0, 2 * i - 1)));
    const ad::Var phase = tape.scale(mu, M_PI * std::pow(2.0, i));
    parts.push_back(tape.mul(tape.sin(phase), atten));
    parts.push_back(tape.mul(tape.cos(phase), atten));
  }
  return tape.hcat(parts);
}

}  // namespace mzen
