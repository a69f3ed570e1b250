#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mzen/datagen.hpp"
#include "mzen/metrics.hpp"
#include "mzen/optimize.hpp"
#include "mzen/priming.hpp"
#include "mzen/training.hpp"

namespace mzen {

struct PhaseBudgets {
  int epochs_a = 200;  // passes per wide-field training image
  int epochs_b = 200;  // passes per zoom-in training image
  int epochs_c = 100;  // passes per training image
};

struct LearnRates {
  double field = 5e-3;
  double pose = 2e-3;
  double zoom = 2e-3;
  double focal = 0.3;  // pixels per step
  double depth_affine = 1e-3;
};

struct TrainConfig {
  Backbone backbone = Backbone::kPlain;
  bool depth_prior = false;
  double depth_weight = 2e-5;
  Reduction reduction = Reduction::kMean;
  int rays_per_step = 1024;
  FieldConfig field = FieldConfig::desk_scale();
  RenderConfig render;
  PhaseBudgets budgets;
  LearnRates lr;
  double lr_gamma = 0.5;
  double lr_period_fraction = 0.4;   // StepLR period as a fraction of the run
  double barf_end_fraction = 0.5;    // gate ramp length as a fraction of the run
  double camp_warmup_fraction = 0.25;
  int camp_n_r = 256;
  double camp_lambda = 1e-3;
  double camp_mu = 1e-4;
  double camp_eta = 1e-3;
  uint64_t seed = 1;
  double wide_dial_threshold = 1.5;
  bool learn_wide_zoom = true;       // freeze flag for wide-field zoom scalars
  double pose_init_noise_rot = 0.0;
  double pose_init_noise_trans = 0.0;
  double focal_init_scale = 0.9;     // initial f = scale * image width
  int register_steps = 150;          // refinement passes per registered image
};

struct PhaseLog {
  char phase = '?';
  long steps = 0;
  std::vector<double> losses;          // per step
  std::vector<double> lr_field;        // per step
  std::map<int, long> passes_per_image;
  std::vector<std::vector<double>> zoom_snapshots;  // zoom per image, sampled
};

struct GroupHashes {
  uint64_t field = 0;
  uint64_t focal = 0;
  uint64_t wide_poses = 0;
};

struct PrimeRecord {
  int image_index = -1;
  int matched_wide_index = -1;  // index into the dataset
  double mse = 0.0;
  double dial_zoom = 1.0;
};

struct TrainResult {
  int config = 0;
  SceneParams params;
  std::vector<PhaseLog> phases;
  long total_passes = 0;
  GroupHashes hashes_before_b;
  GroupHashes hashes_after_b;
  std::vector<PrimeRecord> prime_records;
  std::vector<double> final_zoom;  // per dataset image (trained images only meaningful)
};

std::vector<TrainView> views_from_dataset(const MultiZoomDataset& ds, bool depth_enabled,
                                          double wide_dial_threshold);

// Identity-plus-noise extrinsics, focal_init_scale * width focal, zoom = 1.
SceneParams init_scene_params(const MultiZoomDataset& ds, const TrainConfig& cfg);

// Deterministic ray subset for one training step; the trainer uses
// step_rng = Rng(seed).fork(phase_stream).fork(step).
std::vector<RayBatchItem> sample_step_batch(Rng step_rng, int image_index, int width, int height,
                                            int rays);

GroupHashes hash_groups(const SceneParams& params, const std::vector<TrainView>& views);

// Deterministic full-image objective used for progress checks (no jitter).
double evaluate_full_loss(const SceneParams& params, const std::vector<TrainView>& views,
                          const std::vector<int>& image_indices, const TrainConfig& cfg);

struct TrainState {
  SceneParams params;
  std::vector<TrainView> views;
  std::vector<int> train_wide;
  std::vector<int> train_zoom;
  TrainResult result;
};

// Phase entry points. A bootstraps field + wide poses from wide-field images
// only; B primes and registers zoom-in poses against the frozen field; C
// jointly refines everything.
TrainState run_phase_a(const MultiZoomDataset& ds, const TrainConfig& cfg);
void run_phase_b(TrainState& state, const MultiZoomDataset& ds, const TrainConfig& cfg);
void run_phase_c(TrainState& state, const MultiZoomDataset& ds, const TrainConfig& cfg);

// The four evaluation configurations:
//   1: baseline, wide-field images only (zoom scalars frozen at 1)
//   2: baseline, all images jointly, zoom learnable from 1, dial unused
//   3: phase A only
//   4: full three-phase schedule
// Pass counts satisfy passes(1) == passes(3) and passes(2) == passes(4).
TrainResult run_config(int config, const MultiZoomDataset& ds, const TrainConfig& cfg);

long expected_passes(int config, const MultiZoomDataset& ds, const TrainConfig& cfg);

struct RegisteredPose {
  int image_index = -1;
  PoseState pose;
  PrimeRecord prime;
};

// MZEN's registration machinery applied to held-out frames; the trained
// parameters are left untouched.
std::vector<RegisteredPose> register_test_poses(const SceneParams& trained,
                                                const MultiZoomDataset& ds,
                                                const std::vector<int>& indices,
                                                const TrainConfig& cfg);

struct EvalImageScore {
  int image_index = -1;
  double zoom_level = 1.0;
  MetricScores scores;
};

struct EvaluationReport {
  int config = 0;
  long total_passes = 0;
  std::vector<EvalImageScore> per_image;
  std::map<double, MetricScores> per_zoom;
  MetricScores overall;  // arithmetic mean of the per-zoom blocks
};

EvaluationReport evaluate_on_test(const SceneParams& trained, const MultiZoomDataset& ds,
                                  const TrainConfig& cfg);

// ceil(log(e0/eps) / (eta*mu)); 0 when e0 <= eps.
long predicted_iterations(double e0, double eps, double eta, double mu);

// Similarity (gauge) alignment between a reconstructed camera set and the
// generator's ground truth. Pose-free training fixes the world frame only up
// to a global rotation/translation/scale, so pose-accuracy comparisons run
// through this transform (estimated from the wide-field training cameras).
struct PoseAlignment {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply_point(const Eigen::Vector3d& t) const {
    return scale * (rotation * t) + translation;
  }
  Eigen::Matrix3d apply_rotation(const Eigen::Matrix3d& r) const { return rotation * r; }
};

PoseAlignment align_to_ground_truth(const SceneParams& trained, const MultiZoomDataset& ds,
                                    const std::vector<int>& reference_indices);

// Angle (degrees) between a reconstructed rotation and the ground truth
// after alignment, plus the aligned center error.
double aligned_rotation_error_deg(const PoseAlignment& align, const PoseState& pose,
                                  const CameraPose& gt);
double aligned_translation_error(const PoseAlignment& align, const PoseState& pose,
                                 const CameraPose& gt);

// Frozen-field pose-only objective on a fixed probe-pixel grid. The sampler
// uses bin centers, so the function is deterministic and plain gradient
// descent on it matches the full-batch analysis.
class PoseRefineProblem {
 public:
  PoseRefineProblem(const SceneParams& params, const std::vector<TrainView>& views,
                    int image_index, const TrainConfig& cfg, int probe_grid = 12);

  double loss(const PoseState& pose) const;
  // Gradient over (rotation, translation, zoom), 7 entries.
  Eigen::VectorXd gradient(const PoseState& pose, double* loss_out = nullptr) const;

  static Eigen::VectorXd pack(const PoseState& pose);
  static PoseState unpack(const Eigen::VectorXd& v, const PoseState& like);

 private:
  SceneParams params_;
  std::vector<TrainView> views_;
  int image_index_;
  LossConfig cfg_;
  std::vector<double> xs_, ys_;
};

struct ConvergenceConfig {
  double epsilon = -1.0;  // <= 0: derive a target from the measured traces
  int k_random = 20;
  double sigma_rot = 0.3;
  double sigma_trans = 0.5;
  int budget = 600;
  int probe_grid = 12;
  int optimum_search_steps = 400;
};

struct ConvergenceReport {
  long t_primed = 0;
  std::vector<long> t_random;          // censored runs report budget + 1
  double median_t_random = 0.0;
  int censored = 0;
  double epsilon_excess = 0.0;         // target above the measured optimum
  double loss_optimum = 0.0;
  double e0_primed = 0.0;              // initial excess losses
  double e0_random_median = 0.0;
  double eta = 0.0;
  double mu_hat = 0.0;
  double lipschitz_hat = 0.0;
  double delta_pose = 0.0;             // |primed - optimum| in pose space
  double measured_ratio = 0.0;
  double predicted_ratio = 0.0;        // from the iteration bound
  long t_pred_primed = 0;
  long t_pred_random = 0;
  std::vector<double> primed_trace;    // loss per GD iteration, primed start
};

// Pose-only gradient descent from (a) the primed pose and (b) k random
// poses spread around the ground truth; measures iterations to reach the
// loss target and compares against the linear-rate prediction.
ConvergenceReport priming_convergence_experiment(const TrainState& state,
                                                 const MultiZoomDataset& ds, int image_index,
                                                 const ConvergenceConfig& ccfg,
                                                 const TrainConfig& cfg, Rng& rng);

// Checkpoint I/O (field blob + pose manifest + meta).
void save_checkpoint(const std::string& dir, const TrainResult& result, const TrainConfig& cfg);
struct Checkpoint {
  SceneParams params;
  TrainConfig cfg;
  TrainResult result;  // params + logs (losses omitted on disk reload)
};
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace mzen
