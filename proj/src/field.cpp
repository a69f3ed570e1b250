#include "mzen/field.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace mzen {

namespace {

// Layer order: trunk0..trunk3, density, feature, color0, color1.
std::vector<std::pair<int, int>> layer_shapes(const FieldConfig& cfg) {
  const int in = cfg.position_input_width();
  const int w = cfg.trunk_width;
  return {
      {in, w}, {w, w}, {w, w}, {w, w},                      // trunk
      {w, 1},                                               // density head
      {w, cfg.feature_width},                               // feature head
      {cfg.color_input_width(), cfg.color_hidden},          // color hidden
      {cfg.color_hidden, 3},                                // color output
  };
}

}  // namespace

const char* RadianceFieldParams::layer_name(int idx) {
  static const char* kNames[] = {"trunk0", "trunk1", "trunk2", "trunk3",
                                 "density", "feature", "color0", "color1"};
  return (idx >= 0 && idx < 8) ? kNames[idx] : "?";
}

size_t RadianceFieldParams::parameter_count() const {
  size_t n = 0;
  for (const auto& w : weights) n += static_cast<size_t>(w.size());
  for (const auto& b : biases) n += static_cast<size_t>(b.size());
  return n;
}

uint64_t RadianceFieldParams::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& w : weights) h = fnv1a64(w.data(), sizeof(double) * w.size(), h);
  for (const auto& b : biases) h = fnv1a64(b.data(), sizeof(double) * b.size(), h);
  return h;
}

RadianceFieldParams init_params(const FieldConfig& cfg, uint64_t seed) {
  cfg.enc.validate();
  RadianceFieldParams params;
  params.cfg = cfg;
  Rng rng(seed);
  for (const auto& [fan_in, fan_out] : layer_shapes(cfg)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return params;
}

FieldNodes bind_field(ad::Tape& tape, const RadianceFieldParams& params, bool learnable) {
  FieldNodes nodes;
  nodes.cfg = &params.cfg;
  for (int i = 0; i < params.layer_count(); ++i) {
    const std::string base = std::string("field.") + RadianceFieldParams::layer_name(i);
    if (learnable) {
      nodes.weights.push_back(tape.leaf(params.weights[i], base + ".w"));
      nodes.biases.push_back(tape.leaf(params.biases[i].transpose(), base + ".b"));
    } else {
      nodes.weights.push_back(tape.constant(params.weights[i]));
      nodes.biases.push_back(tape.constant(params.biases[i].transpose()));
    }
  }
  return nodes;
}

FieldOutput field_forward(ad::Tape& tape, const FieldNodes& field, ad::Var x_enc, ad::Var d_enc) {
  const FieldConfig& cfg = *field.cfg;
  if (tape.value(x_enc).cols() != cfg.position_input_width())
    throw usage_error("field_forward: position encoding width must be " +
                      std::to_string(cfg.position_input_width()) + ", got " +
                      std::to_string(tape.value(x_enc).cols()));
  if (tape.value(d_enc).cols() != cfg.direction_input_width())
    throw usage_error("field_forward: direction encoding width must be " +
                      std::to_string(cfg.direction_input_width()) + ", got " +
                      std::to_string(tape.value(d_enc).cols()));

  auto affine = [&](ad::Var x, int layer) {
    return tape.add_row(tape.matmul(x, field.weights[layer]), field.biases[layer]);
  };

  ad::Var h = x_enc;
  for (int i = 0; i < RadianceFieldParams::kTrunkLayers; ++i) h = tape.relu(affine(h, i));

  const ad::Var sigma = tape.relu(affine(h, 4));
  const ad::Var feat = affine(h, 5);  // no activation on the feature head

  const ad::Var merged_parts[] = {feat, d_enc};
  const ad::Var merged = tape.hcat(merged_parts);
  const ad::Var color_h = tape.relu(affine(merged, 6));
  const ad::Var rgb = tape.sigmoid(affine(color_h, 7));

  return FieldOutput{rgb, sigma};
}

void field_forward_values(const RadianceFieldParams& params, const Eigen::MatrixXd& x_enc,
                          const Eigen::MatrixXd& d_enc, Eigen::MatrixXd* rgb,
                          Eigen::VectorXd* sigma) {
  ad::Tape tape;
  const FieldNodes nodes = bind_field(tape, params, /*learnable=*/false);
  const FieldOutput out =
      field_forward(tape, nodes, tape.constant(x_enc), tape.constant(d_enc));
  *rgb = tape.value(out.rgb);
  *sigma = tape.value(out.sigma).col(0);
}

void save_field(const std::string& path, const RadianceFieldParams& params) {
  nlohmann::ordered_json header;
  header["format"] = "mzen-field-v1";
  header["trunk_width"] = params.cfg.trunk_width;
  header["feature_width"] = params.cfg.feature_width;
  header["color_hidden"] = params.cfg.color_hidden;
  header["levels_position"] = params.cfg.enc.levels_position;
  header["levels_direction"] = params.cfg.enc.levels_direction;
  nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
  for (const auto& w : params.weights) shapes.push_back({w.rows(), w.cols()});
  header["shapes"] = shapes;

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("save_field: cannot open '" + path + "'");
  const uint64_t head_len = head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& w : params.weights)
    out.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(sizeof(double) * w.size()));
  for (const auto& b : params.biases)
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(sizeof(double) * b.size()));
  if (!out) throw data_error("save_field: short write to '" + path + "'");
}

RadianceFieldParams load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("load_field: cannot open '" + path + "'");
  uint64_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (!in || head_len > (1ull << 20)) throw data_error("load_field: bad header in '" + path + "'");
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    throw data_error("load_field: header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != "mzen-field-v1")
    throw data_error("load_field: unknown format field in '" + path + "'");

  FieldConfig cfg;
  cfg.trunk_width = header.at("trunk_width").get<int>();
  cfg.feature_width = header.at("feature_width").get<int>();
  cfg.color_hidden = header.at("color_hidden").get<int>();
  cfg.enc.levels_position = header.at("levels_position").get<int>();
  cfg.enc.levels_direction = header.at("levels_direction").get<int>();

  RadianceFieldParams params;
  params.cfg = cfg;
  for (const auto& shape : header.at("shapes")) {
    const auto rows = shape.at(0).get<Eigen::Index>();
    const auto cols = shape.at(1).get<Eigen::Index>();
    Eigen::MatrixXd w(rows, cols);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * w.size()));
    params.weights.push_back(std::move(w));
  }
  for (const auto& w : params.weights) {
    Eigen::VectorXd b(w.cols());
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double) * b.size()));
    params.biases.push_back(std::move(b));
  }
  if (!in) throw data_error("load_field: '" + path + "' is truncated");
  return params;
}

}  // namespace mzen
