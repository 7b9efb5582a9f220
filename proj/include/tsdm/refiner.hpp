#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tsdm/coretrk.hpp"
#include "tsdm/geometry.hpp"
#include "tsdm/raster.hpp"

namespace tsdm::refiner {

// Dense C x H x W tensor of doubles.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) { resize(c_, h_, w_); }

  void resize(int c_, int h_, int w_) {
    c = c_;
    h = h_;
    w = w_;
    v.assign(std::size_t(c) * h * w, 0.0);
  }
  std::size_t plane() const { return std::size_t(h) * w; }
  double& at(int ci, int yi, int xi) { return v[(std::size_t(ci) * h + yi) * w + xi]; }
  double at(int ci, int yi, int xi) const { return v[(std::size_t(ci) * h + yi) * w + xi]; }
};

struct ConvLayer {
  int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 0;
  std::vector<double> w;  // [out_c][in_c][k][k]
  std::vector<double> b;  // [out_c]
};

struct DenseLayer {
  int in_n = 0, out_n = 0;
  std::vector<double> w;  // [out_n][in_n]
  std::vector<double> b;  // [out_n]
};

// Spatial reduction feeding the fully-connected head.
enum class HeadPool : std::uint8_t { GlobalAverage = 0, Flatten = 1 };

// Refiner inputs: 100x100x3 color (scaled to [0,1]) and depth (normalized by
// the frame's max valid depth, replicated to 3 channels), plus the frame
// placement of the crop they came from.
struct RefinerInput {
  Tensor3 color;  // 3 x 100 x 100
  Tensor3 depth;  // 3 x 100 x 100
  Box crop_box;
};

// Crop-normalized box regression target: size (w, h) and bottom-right corner
// (xr, yb), each a fraction of the corresponding crop extent in (0,1].
struct RefinerOutput {
  double w = 0.0, h = 0.0, xr = 0.0, yb = 0.0;

  std::array<double, 4> as_array() const { return {w, h, xr, yb}; }
  static RefinerOutput from_array(const std::array<double, 4>& a) {
    return RefinerOutput{a[0], a[1], a[2], a[3]};
  }
};

inline constexpr int kInputSide = 100;

// Two stride-2 3x3 conv stacks (widths 8/16/32) with an early spatial tap
// after layer 1, average-pooled onto the layer-3 grid and concatenated with
// the layer-3 features; branch features concatenate channel-wise and fuse
// through a 1x1 convolution before the fully-connected head.
struct RefinerModel {
  std::array<ConvLayer, 3> color_branch;
  std::array<ConvLayer, 3> depth_branch;
  ConvLayer fusion;  // 1x1
  DenseLayer fc1;
  DenseLayer fc2;
  HeadPool pool = HeadPool::GlobalAverage;

  struct ParamRef {
    std::string name;
    std::vector<int> dims;
    std::vector<double>* data;
    bool backbone;  // frozen during the first training epochs
  };
  std::vector<ParamRef> parameters();
  std::vector<ParamRef> parameters() const;  // const view (data non-null, do not write)

  std::size_t parameter_count() const;

  // Seeded Glorot-uniform weights, zero biases.
  static RefinerModel make(std::uint64_t seed, HeadPool pool = HeadPool::GlobalAverage);
};

// Gradient (or any parameter-shaped) buffer set, aligned with parameters().
using GradientSet = std::vector<std::vector<double>>;
GradientSet zero_gradients(const RefinerModel& model);

// Reusable activation/scratch buffers for forward and backward passes.
struct ForwardCache {
  struct BranchCache {
    std::vector<double> col1, col2, col3;
    Tensor3 a1, a2, a3, tap;
  };
  BranchCache color, depth;
  Tensor3 concat, fa;
  std::vector<double> head, h1, out;
  // backward scratch
  std::vector<double> dcol, dhead, dh1, dout;
  Tensor3 dconcat, dfa, da1, da2, da3, dtap, dtmp;
};

// Deterministic forward pass; throws a numeric error naming the layer when a
// non-finite activation appears (checks skipped when check = false).
RefinerOutput forward(const RefinerModel& model, const RefinerInput& input);
RefinerOutput forward_pass(const RefinerModel& model, const RefinerInput& input,
                           ForwardCache& cache, bool check);

double smooth_l1(double x);

// Eq-style box loss: smooth L1 over the four relative errors, each
// normalized by its ground-truth component. All gt components must be > 0.
double loss(const RefinerOutput& pred, const RefinerOutput& gt);

// Analytic gradients of loss() w.r.t. every parameter, accumulated into
// `grads`. Returns the sample loss. With backbone_grads = false the branch
// conv stacks are skipped (their grad entries are left untouched).
double backward_accumulate(const RefinerModel& model, const RefinerInput& input,
                           const RefinerOutput& gt, ForwardCache& cache,
                           GradientSet& grads, bool backbone_grads = true);

GradientSet backward(const RefinerModel& model, const RefinerInput& input,
                     const RefinerOutput& gt);

inline constexpr std::uint64_t kGradCheckSampleSeed = 0x5eedc0de;

// Max relative error between `analytic` and central finite differences over
// a seeded sample of at least `min_samples` parameters.
double max_rel_error_vs_fd(const RefinerModel& model, const GradientSet& analytic,
                           const RefinerInput& input, const RefinerOutput& gt,
                           double eps, std::uint64_t sample_seed, int min_samples);

// Runs backward() and compares against finite differences; eps must lie in
// [1e-6, 1e-3].
double grad_check(const RefinerModel& model, const RefinerInput& input,
                  const RefinerOutput& gt, double eps,
                  std::uint64_t sample_seed = kGradCheckSampleSeed);

struct TrainConfig {
  int batch = 16;
  int epochs = 20;
  double lr_start = 0.05;
  double lr_end = 0.0001;
  int backbone_freeze_epochs = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainSample {
  RefinerInput input;
  RefinerOutput gt;
};

struct TrainTrace {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_first_lr;
  std::vector<double> epoch_last_lr;
};

// Linear decay across all steps: lr_start at step 0, lr_end at the final step.
double lr_at(const TrainConfig& cfg, long step, long total_steps);

// Plain mini-batch gradient descent per the configured schedule. Branch
// stacks stay frozen for the first backbone_freeze_epochs epochs. Throws on
// a non-finite batch loss, naming epoch and batch.
RefinerModel train(RefinerModel model, const std::vector<TrainSample>& data,
                   const TrainConfig& cfg, TrainTrace* trace = nullptr,
                   const std::function<void(int, const RefinerModel&)>& on_epoch = {});

// Bounding union of the top-scoring candidate and every candidate whose IOU
// with it reaches alpha1.
Box nms_merge(const std::vector<core::ScoredBox>& candidates, double alpha1);

// Center-preserving enlargement by (1 + alpha2), clipped to the frame.
Box amplify(const Box& box, double alpha2, double frame_w, double frame_h);

RefinerInput prepare_input(const ColorRaster& xc, const DepthRaster& xd,
                           const Box& crop_box);

// Crop-normalized output to frame coordinates; w/h are clamped to xr/yb so
// the box never leaves the crop.
Box denormalize_output(const RefinerOutput& out, const Box& crop_box);

struct RefineResult {
  Box box;       // refined box, frame coordinates, contained in crop_box
  Box crop_box;  // the amplified merged region fed to the network
  RefinerOutput raw;
};

RefineResult refine(const std::vector<core::ScoredBox>& candidates,
                    const ColorRaster& xc, const DepthRaster& xd,
                    const RefinerModel& model, double alpha1, double alpha2);

// Versioned binary weights container: magic, format version, architecture
// descriptor, then tensors as row-major little-endian 32-bit floats. The
// reader rejects any descriptor mismatch.
void save_model(const std::filesystem::path& file, const RefinerModel& model);
RefinerModel load_model(const std::filesystem::path& file);

}  // namespace tsdm::refiner
