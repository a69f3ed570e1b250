#include "mzen/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace mzen {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

bool Primitive::contains(const Eigen::Vector3d& x) const {
  if (kind == Kind::kSphere) return (x - center).squaredNorm() <= size.x() * size.x();
  return std::fabs(x.x() - center.x()) <= size.x() && std::fabs(x.y() - center.y()) <= size.y() &&
         std::fabs(x.z() - center.z()) <= size.z();
}

double Primitive::volume() const {
  if (kind == Kind::kSphere) return 4.0 / 3.0 * M_PI * std::pow(size.x(), 3);
  return 8.0 * size.x() * size.y() * size.z();
}

void analytic_field(const AnalyticScene& scene, const Eigen::Vector3d& x,
                    const Eigen::Vector3d& /*d*/, Eigen::Vector3d* rgb, double* sigma) {
  const Primitive* innermost = nullptr;
  for (const Primitive& p : scene.primitives)
    if (p.contains(x) && (!innermost || p.volume() < innermost->volume())) innermost = &p;
  if (innermost) {
    *rgb = innermost->albedo;
    *sigma = innermost->density;
  } else {
    rgb->setZero();
    *sigma = 0.0;
  }
}

FieldEval analytic_field_eval(const AnalyticScene& scene) {
  return [scene](const Eigen::MatrixX3d& positions, const Eigen::MatrixX3d& /*dirs*/,
                 Eigen::MatrixX3d* rgb, Eigen::VectorXd* sigma) {
    rgb->resize(positions.rows(), 3);
    sigma->resize(positions.rows());
    Eigen::Vector3d c;
    double s;
    for (Eigen::Index i = 0; i < positions.rows(); ++i) {
      analytic_field(scene, positions.row(i), Eigen::Vector3d::UnitZ(), &c, &s);
      rgb->row(i) = c;
      (*sigma)[i] = s;
    }
  };
}

void render_ground_truth(const AnalyticScene& scene, const CameraPose& pose, int height,
                         int width, const RenderConfig& cfg, const Rng& rng, Image* image,
                         DepthMap* depth) {
  render_image(analytic_field_eval(scene), pose, height, width, cfg, rng, image, depth);
}

std::array<Image, 3> synthesize_zoom_triplet(const Image& hr) {
  if (hr.width % 4 != 0 || hr.height % 4 != 0)
    throw data_error("synthesize_zoom_triplet: master dimensions must be divisible by 4, got " +
                     std::to_string(hr.width) + "x" + std::to_string(hr.height));
  // The 1440x1040 master keeps its published 390x260 native resolution.
  const bool paper_dims = hr.width == 1440 && hr.height == 1040;
  const int out_w = paper_dims ? 390 : hr.width / 4;
  const int out_h = paper_dims ? 260 : hr.height / 4;
  std::array<Image, 3> out;
  out[0] = resize_bicubic(hr, out_w, out_h);
  out[1] = resize_bicubic(center_crop(hr, hr.width / 2, hr.height / 2), out_w, out_h);
  out[2] = center_crop(hr, hr.width / 4, hr.height / 4);
  return out;
}

int MultiZoomDataset::count_wide(double dial_threshold) const {
  int n = 0;
  for (const DatasetImage& img : images)
    if (img.dial_zoom <= dial_threshold) ++n;
  return n;
}

MultiZoomDataset generate_scene_dataset(const AnalyticScene& scene, const CameraRingSpec& ring,
                                        const std::vector<double>& zoom_levels, int height,
                                        int width, const RenderConfig& cfg, Rng& rng,
                                        const std::string& name) {
  if (ring.count < 2) throw usage_error("generate_scene_dataset: need at least 2 cameras");
  if (std::find(zoom_levels.begin(), zoom_levels.end(), 1.0) == zoom_levels.end())
    throw usage_error("generate_scene_dataset: zoom levels must include 1");

  MultiZoomDataset ds;
  ds.scene_name = name;
  ds.width = width;
  ds.height = height;
  ds.zoom_levels = zoom_levels;
  ds.world_bounds = scene.bounds;
  ds.near = cfg.near;
  ds.far = cfg.far;

  const Eigen::Vector2d focal(ring.focal_scale * width, ring.focal_scale * width);
  const Eigen::Vector2d principal((width - 1) / 2.0, (height - 1) / 2.0);
  const Eigen::Vector3d aim(0.0, 0.0, ring.look_z);

  Rng pose_rng = rng.fork(1);
  Rng dial_rng = rng.fork(2);
  Rng depth_rng = rng.fork(3);

  for (int c = 0; c < ring.count; ++c) {
    const double angle = 2.0 * M_PI * c / ring.count;
    Eigen::Vector3d position(ring.radius * std::cos(angle), ring.radius * std::sin(angle),
                             -ring.distance);
    position += Eigen::Vector3d(pose_rng.normal(0, ring.jitter_trans),
                                pose_rng.normal(0, ring.jitter_trans),
                                pose_rng.normal(0, ring.jitter_trans));

    const Eigen::Vector3d forward = (aim - position).normalized();
    const Eigen::Vector3d right = Eigen::Vector3d(0, 1, 0).cross(forward).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Eigen::Matrix3d r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    Eigen::Vector3d rot = axis_angle_from_rotation(r);
    rot += Eigen::Vector3d(pose_rng.normal(0, ring.jitter_rot), pose_rng.normal(0, ring.jitter_rot),
                           pose_rng.normal(0, ring.jitter_rot));

    // Extrinsics stay identical across the camera's zoom levels.
    for (double zoom : zoom_levels) {
      CameraPose pose;
      pose.rotation = rot;
      pose.translation = position;
      pose.focal = focal;
      pose.principal = principal;
      pose.zoom = zoom;

      DatasetImage img;
      img.camera = c;
      img.dial_zoom = zoom;
      if (ring.dial_noise > 0.0 && zoom > 1.0)
        img.dial_zoom = std::max(1.0, zoom * (1.0 + dial_rng.normal(0, ring.dial_noise)));
      img.gt_pose = pose;

      Image rendered;
      DepthMap depth;
      const Rng render_rng = rng.fork(1000 + static_cast<uint64_t>(c) * 101 +
                                      static_cast<uint64_t>(zoom * 16.0));
      render_ground_truth(scene, pose, height, width, cfg, render_rng, &rendered, &depth);
      if (ring.depth_noise > 0.0)
        for (double& v : depth.data) v *= 1.0 + depth_rng.normal(0, ring.depth_noise);
      img.image = std::move(rendered);
      img.gt_depth = std::move(depth);
      ds.images.push_back(std::move(img));
    }
  }
  return ds;
}

std::string split_train_test(MultiZoomDataset& ds, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw usage_error("split_train_test: fraction must be in (0, 1)");
  const int n = static_cast<int>(ds.images.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

  const int n_train = static_cast<int>(std::floor(train_fraction * n));
  ds.train_indices.assign(order.begin(), order.begin() + n_train);
  ds.test_indices.assign(order.begin() + n_train, order.end());
  std::sort(ds.train_indices.begin(), ds.train_indices.end());
  std::sort(ds.test_indices.begin(), ds.test_indices.end());

  bool has_wide = false;
  for (int idx : ds.train_indices)
    if (ds.images[idx].dial_zoom <= 1.5) has_wide = true;
  if (!has_wide)
    return "split_train_test: training split contains no wide-field image; "
           "Phase A will not be possible with this split";
  return {};
}

namespace {

std::string zoom_label(double zoom) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", zoom);
  return buf;
}

ordered_json pose_to_json(const CameraPose& p) {
  ordered_json j;
  j["rotation"] = {p.rotation.x(), p.rotation.y(), p.rotation.z()};
  j["translation"] = {p.translation.x(), p.translation.y(), p.translation.z()};
  j["focal"] = {p.focal.x(), p.focal.y()};
  j["principal"] = {p.principal.x(), p.principal.y()};
  j["zoom"] = p.zoom;
  return j;
}

CameraPose pose_from_json(const nlohmann::json& j, const std::string& where) {
  auto vec = [&](const char* key, size_t n) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != n)
      throw data_error("scene.json: missing or malformed key '" + std::string(key) + "' in " +
                       where);
    std::vector<double> v;
    for (const auto& e : j[key]) {
      if (!e.is_number()) throw data_error("scene.json: non-numeric entry under '" +
                                           std::string(key) + "' in " + where);
      v.push_back(e.get<double>());
    }
    return v;
  };
  CameraPose p;
  auto r = vec("rotation", 3);
  auto t = vec("translation", 3);
  auto f = vec("focal", 2);
  auto c = vec("principal", 2);
  p.rotation = Eigen::Vector3d(r[0], r[1], r[2]);
  p.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  p.focal = Eigen::Vector2d(f[0], f[1]);
  p.principal = Eigen::Vector2d(c[0], c[1]);
  if (!j.contains("zoom") || !j["zoom"].is_number())
    throw data_error("scene.json: missing or malformed key 'zoom' in " + where);
  p.zoom = j["zoom"].get<double>();
  return p;
}

}  // namespace

void save_dataset(const MultiZoomDataset& ds, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "images");
  fs::create_directories(fs::path(dir) / "depth");

  ordered_json j;
  j["scene"] = ds.scene_name;
  j["resolution"] = {ds.width, ds.height};
  j["zoom_levels"] = ds.zoom_levels;
  j["world_bounds"] = {{ds.world_bounds.min().x(), ds.world_bounds.min().y(),
                        ds.world_bounds.min().z()},
                       {ds.world_bounds.max().x(), ds.world_bounds.max().y(),
                        ds.world_bounds.max().z()}};
  j["near"] = ds.near;
  j["far"] = ds.far;

  ordered_json images = ordered_json::array();
  for (size_t i = 0; i < ds.images.size(); ++i) {
    const DatasetImage& img = ds.images[i];
    const std::string stem =
        "cam" + std::to_string(img.camera) + "_z" + zoom_label(img.dial_zoom);
    const std::string image_rel = "images/" + stem + ".png";
    write_png((fs::path(dir) / image_rel).string(), img.image);

    ordered_json rec;
    rec["path"] = image_rel;
    rec["camera"] = img.camera;
    rec["dial_zoom"] = img.dial_zoom;
    if (img.gt_depth) {
      const std::string depth_rel = "depth/" + stem + ".bin";
      write_depth_bin((fs::path(dir) / depth_rel).string(), *img.gt_depth);
      rec["depth"] = depth_rel;
    }
    if (img.gt_pose) rec["pose"] = pose_to_json(*img.gt_pose);
    images.push_back(rec);
  }
  j["images"] = images;
  j["split"] = {{"train", ds.train_indices}, {"test", ds.test_indices}};

  std::ofstream out(fs::path(dir) / "scene.json");
  if (!out) throw data_error("save_dataset: cannot write manifest in '" + dir + "'");
  out << j.dump(2) << "\n";
}

MultiZoomDataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "scene.json");
  if (!in) throw data_error("load_dataset: missing scene.json in '" + dir + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw data_error("load_dataset: scene.json is not valid JSON: " + std::string(e.what()));
  }

  auto require = [&](const nlohmann::json& obj, const char* key, const std::string& where)
      -> const nlohmann::json& {
    if (!obj.contains(key))
      throw data_error("scene.json: missing key '" + std::string(key) + "' in " + where);
    return obj[key];
  };

  MultiZoomDataset ds;
  ds.scene_name = require(j, "scene", "root").get<std::string>();
  const auto& res = require(j, "resolution", "root");
  if (!res.is_array() || res.size() != 2)
    throw data_error("scene.json: malformed key 'resolution' in root");
  ds.width = res[0].get<int>();
  ds.height = res[1].get<int>();
  for (const auto& z : require(j, "zoom_levels", "root")) ds.zoom_levels.push_back(z.get<double>());
  const auto& wb = require(j, "world_bounds", "root");
  if (!wb.is_array() || wb.size() != 2 || wb[0].size() != 3 || wb[1].size() != 3)
    throw data_error("scene.json: malformed key 'world_bounds' in root");
  ds.world_bounds =
      Eigen::AlignedBox3d(Eigen::Vector3d(wb[0][0].get<double>(), wb[0][1].get<double>(),
                                          wb[0][2].get<double>()),
                          Eigen::Vector3d(wb[1][0].get<double>(), wb[1][1].get<double>(),
                                          wb[1][2].get<double>()));
  ds.near = require(j, "near", "root").get<double>();
  ds.far = require(j, "far", "root").get<double>();

  int idx = 0;
  for (const auto& rec : require(j, "images", "root")) {
    const std::string where = "images[" + std::to_string(idx) + "]";
    DatasetImage img;
    img.camera = require(rec, "camera", where).get<int>();
    if (!rec.contains("dial_zoom") || !rec["dial_zoom"].is_number())
      throw data_error("scene.json: missing or malformed key 'dial_zoom' in " + where);
    img.dial_zoom = rec["dial_zoom"].get<double>();
    const std::string rel = require(rec, "path", where).get<std::string>();
    img.image = read_png((fs::path(dir) / rel).string());
    if (img.image.width != ds.width || img.image.height != ds.height)
      throw data_error("load_dataset: image '" + rel + "' does not match the manifest resolution");
    if (rec.contains("depth"))
      img.gt_depth = read_depth_bin((fs::path(dir) / rec["depth"].get<std::string>()).string(),
                                    ds.width, ds.height);
    if (rec.contains("pose")) img.gt_pose = pose_from_json(rec["pose"], where);
    ds.images.push_back(std::move(img));
    ++idx;
  }

  const auto& split = require(j, "split", "root");
  for (const auto& t : require(split, "train", "split")) ds.train_indices.push_back(t.get<int>());
  for (const auto& t : require(split, "test", "split")) ds.test_indices.push_back(t.get<int>());
  for (int i : ds.train_indices)
    if (i < 0 || i >= static_cast<int>(ds.images.size()))
      throw data_error("scene.json: split index " + std::to_string(i) + " out of range");
  for (int i : ds.test_indices)
    if (i < 0 || i >= static_cast<int>(ds.images.size()))
      throw data_error("scene.json: split index " + std::to_string(i) + " out of range");
  return ds;
}

AnalyticScene default_scene(uint64_t seed) {
  AnalyticScene scene;
  scene.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(-1.2, -1.2, -1.2),
                                     Eigen::Vector3d(1.2, 1.2, 1.2));

  // Matte back wall; edges give the pose solver coarse structure.
  Primitive wall;
  wall.kind = Primitive::Kind::kBox;
  wall.center = Eigen::Vector3d(0.0, 0.0, 1.05);
  wall.size = Eigen::Vector3d(1.1, 1.1, 0.05);
  wall.albedo = Eigen::Vector3d(0.25, 0.3, 0.45);
  wall.density = 60.0;
  scene.primitives.push_back(wall);

  // Fine texture: a grid of small bright beads on the wall, only a couple of
  // pixels wide in the 1x views.
  Rng rng(seed);
  const Eigen::Vector3d palette[6] = {
      {0.95, 0.35, 0.25}, {0.3, 0.85, 0.35}, {0.95, 0.85, 0.3},
      {0.35, 0.6, 0.95},  {0.9, 0.5, 0.85},  {0.5, 0.95, 0.9},
  };
  int k = 0;
  for (int gy = -2; gy <= 2; ++gy)
    for (int gx = -2; gx <= 2; ++gx) {
      Primitive bead;
      bead.center = Eigen::Vector3d(0.33 * gx + rng.uniform(-0.05, 0.05),
                                    0.33 * gy + rng.uniform(-0.05, 0.05),
                                    0.92 + rng.uniform(-0.02, 0.02));
      bead.size = Eigen::Vector3d::Constant(rng.uniform(0.035, 0.055));
      bead.albedo = palette[k++ % 6];
      bead.density = 160.0;
      scene.primitives.push_back(bead);
    }

  // A few mid-field spheres for parallax.
  for (int i = 0; i < 3; ++i) {
    Primitive s;
    s.center = Eigen::Vector3d(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6),
                               rng.uniform(0.15, 0.55));
    s.size = Eigen::Vector3d::Constant(rng.uniform(0.12, 0.2));
    s.albedo = palette[(i * 2 + 1) % 6] * 0.85;
    s.density = 80.0;
    scene.primitives.push_back(s);
  }
  return scene;
}

AnalyticScene one_sphere_scene() {
  AnalyticScene scene;
  Primitive s;
  s.center = Eigen::Vector3d(0.0, 0.0, 0.5);
  s.size = Eigen::Vector3d::Constant(0.4);
  s.albedo = Eigen::Vector3d(0.8, 0.3, 0.2);
  s.density = 8.0;
  scene.primitives.push_back(s);
  return scene;
}

}  // namespace mzen
