#include "tsdm/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tsdm/rng.hpp"

namespace tsdm::refiner {

namespace {

int conv_out_dim(int in, const ConvLayer& l) {
  return (in + 2 * l.pad - l.k) / l.stride + 1;
}

ConvLayer make_conv(int in_c, int out_c, int k, int stride, int pad) {
  ConvLayer l;
  l.in_c = in_c;
  l.out_c = out_c;
  l.k = k;
  l.stride = stride;
  l.pad = pad;
  l.w.assign(std::size_t(out_c) * in_c * k * k, 0.0);
  l.b.assign(out_c, 0.0);
  return l;
}

DenseLayer make_dense(int in_n, int out_n) {
  DenseLayer l;
  l.in_n = in_n;
  l.out_n = out_n;
  l.w.assign(std::size_t(out_n) * in_n, 0.0);
  l.b.assign(out_n, 0.0);
  return l;
}

// Spatial sizes along the branch: 100 -> 50 -> 25 -> 13.
constexpr int kS1 = 50, kS2 = 25, kS3 = 13;
constexpr int kBranchCh = 8 + 32;               // tap + layer-3 features
constexpr int kConcatCh = 2 * kBranchCh;        // both branches
constexpr int kFusedCh = 32;
constexpr int kFc1Width = 128;

int head_width(HeadPool pool) {
  return pool == HeadPool::GlobalAverage ? kFusedCh : kFusedCh * kS3 * kS3;
}

void glorot_fill(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (double(fan_in) + double(fan_out)));
  for (double& v : w) v = rng.uniform(-a, a);
}

}  // namespace

RefinerModel RefinerModel::make(std::uint64_t seed, HeadPool pool) {
  RefinerModel m;
  m.pool = pool;
  for (auto* branch : {&m.color_branch, &m.depth_branch}) {
    (*branch)[0] = make_conv(3, 8, 3, 2, 1);
    (*branch)[1] = make_conv(8, 16, 3, 2, 1);
    (*branch)[2] = make_conv(16, 32, 3, 2, 1);
  }
  m.fusion = make_conv(kConcatCh, kFusedCh, 1, 1, 0);
  m.fc1 = make_dense(head_width(pool), kFc1Width);
  m.fc2 = make_dense(kFc1Width, 4);

  Rng rng(seed);
  for (auto& ref : m.parameters()) {
    if (ref.dims.size() == 1) continue;  // biases stay zero
    int fan_in, fan_out;
    if (ref.dims.size() == 4) {
      fan_in = ref.dims[1] * ref.dims[2] * ref.dims[3];
      fan_out = ref.dims[0] * ref.dims[2] * ref.dims[3];
    } else {
      fan_in = ref.dims[1];
      fan_out = ref.dims[0];
    }
    glorot_fill(*ref.data, fan_in, fan_out, rng);
  }
  return m;
}

std::vector<RefinerModel::ParamRef> RefinerModel::parameters() {
  std::vector<ParamRef> refs;
  auto add_conv = [&](const std::string& name, ConvLayer& l, bool backbone) {
    refs.push_back({name + ".weight", {l.out_c, l.in_c, l.k, l.k}, &l.w, backbone});
    refs.push_back({name + ".bias", {l.out_c}, &l.b, backbone});
  };
  for (int i = 0; i < 3; ++i)
    add_conv("color.conv" + std::to_string(i + 1), color_branch[i], true);
  for (int i = 0; i < 3; ++i)
    add_conv("depth.conv" + std::to_string(i + 1), depth_branch[i], true);
  add_conv("fusion", fusion, false);
  refs.push_back({"fc1.weight", {fc1.out_n, fc1.in_n}, &fc1.w, false});
  refs.push_back({"fc1.bias", {fc1.out_n}, &fc1.b, false});
  refs.push_back({"fc2.weight", {fc2.out_n, fc2.in_n}, &fc2.w, false});
  refs.push_back({"fc2.bias", {fc2.out_n}, &fc2.b, false});
  return refs;
}

std::vector<RefinerModel::ParamRef> RefinerModel::parameters() const {
  return const_cast<RefinerModel*>(this)->parameters();
}

std::size_t RefinerModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& ref : parameters()) n += ref.data->size();
  return n;
}

GradientSet zero_gradients(const RefinerModel& model) {
  GradientSet g;
  for (const auto& ref : model.parameters()) g.emplace_back(ref.data->size(), 0.0);
  return g;
}

namespace {

[[noreturn]] void numeric_error(const std::string& layer) {
  throw std::runtime_error("non-finite activation in layer " + layer);
}

void check_finite(const std::vector<double>& v, const std::string& layer) {
  for (double x : v)
    if (!std::isfinite(x)) numeric_error(layer);
}

// col rows are (ic, ky, kx), columns are output pixels.
void im2col(const Tensor3& in, const ConvLayer& l, int out_h, int out_w,
            std::vector<double>& col) {
  const std::size_t npix = std::size_t(out_h) * out_w;
  col.assign(std::size_t(l.in_c) * l.k * l.k * npix, 0.0);
  int r = 0;
  for (int ic = 0; ic < l.in_c; ++ic) {
    for (int ky = 0; ky < l.k; ++ky) {
      for (int kx = 0; kx < l.k; ++kx, ++r) {
        double* dst_base = col.data() + std::size_t(r) * npix;
        int ox_lo = 0;
        while (ox_lo < out_w && ox_lo * l.stride + kx - l.pad < 0) ++ox_lo;
        int ox_hi = out_w;
        while (ox_hi > ox_lo && (ox_hi - 1) * l.stride + kx - l.pad >= in.w) --ox_hi;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * l.stride + ky - l.pad;
          if (iy < 0 || iy >= in.h) continue;
          const double* src = &in.v[(std::size_t(ic) * in.h + iy) * in.w];
          double* dst = dst_base + std::size_t(oy) * out_w;
          for (int ox = ox_lo; ox < ox_hi; ++ox)
            dst[ox] = src[ox * l.stride + kx - l.pad];
        }
      }
    }
  }
}

void col2im_accumulate(const std::vector<double>& dcol, const ConvLayer& l,
                       int out_h, int out_w, Tensor3& din) {
  const std::size_t npix = std::size_t(out_h) * out_w;
  int r = 0;
  for (int ic = 0; ic < l.in_c; ++ic) {
    for (int ky = 0; ky < l.k; ++ky) {
      for (int kx = 0; kx < l.k; ++kx, ++r) {
        const double* src_base = dcol.data() + std::size_t(r) * npix;
        int ox_lo = 0;
        while (ox_lo < out_w && ox_lo * l.stride + kx - l.pad < 0) ++ox_lo;
        int ox_hi = out_w;
        while (ox_hi > ox_lo && (ox_hi - 1) * l.stride + kx - l.pad >= din.w) --ox_hi;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * l.stride + ky - l.pad;
          if (iy < 0 || iy >= din.h) continue;
          double* dst = &din.v[(std::size_t(ic) * din.h + iy) * din.w];
          const double* src = src_base + std::size_t(oy) * out_w;
          for (int ox = ox_lo; ox < ox_hi; ++ox)
            dst[ox * l.stride + kx - l.pad] += src[ox];
        }
      }
    }
  }
}

// out = W * col + b, using the already materialized col matrix.
void conv_forward_col(const ConvLayer& l, const std::vector<double>& col,
                      int out_h, int out_w, Tensor3& out) {
  const std::size_t npix = std::size_t(out_h) * out_w;
  const int rows = l.in_c * l.k * l.k;
  out.resize(l.out_c, out_h, out_w);
  for (int oc = 0; oc < l.out_c; ++oc) {
    double* op = out.v.data() + std::size_t(oc) * npix;
    std::fill(op, op + npix, l.b[oc]);
    const double* wr = l.w.data() + std::size_t(oc) * rows;
    for (int r = 0; r < rows; ++r) {
      const double wv = wr[r];
      const double* cp = col.data() + std::size_t(r) * npix;
      for (std::size_t j = 0; j < npix; ++j) op[j] += wv * cp[j];
    }
  }
}

// Accumulates dW/db from the pre-activation gradient, and optionally the
// gradient w.r.t. the col matrix.
void conv_backward_col(const ConvLayer& l, const std::vector<double>& col,
                       const Tensor3& dpre, std::vector<double>& dw,
                       std::vector<double>& db, std::vector<double>* dcol) {
  const std::size_t npix = dpre.plane();
  const int rows = l.in_c * l.k * l.k;
  if (dcol) dcol->assign(std::size_t(rows) * npix, 0.0);
  for (int oc = 0; oc < l.out_c; ++oc) {
    const double* dp = dpre.v.data() + std::size_t(oc) * npix;
    double bsum = 0.0;
    for (std::size_t j = 0; j < npix; ++j) bsum += dp[j];
    db[oc] += bsum;
    double* dwr = dw.data() + std::size_t(oc) * rows;
    const double* wr = l.w.data() + std::size_t(oc) * rows;
    for (int r = 0; r < rows; ++r) {
      const double* cp = col.data() + std::size_t(r) * npix;
      double acc = 0.0;
      for (std::size_t j = 0; j < npix; ++j) acc += dp[j] * cp[j];
      dwr[r] += acc;
      if (dcol) {
        double* dc = dcol->data() + std::size_t(r) * npix;
        const double wv = wr[r];
        for (std::size_t j = 0; j < npix; ++j) dc[j] += wv * dp[j];
      }
    }
  }
}

void tanh_inplace(Tensor3& t) {
  for (double& v : t.v) v = std::tanh(v);
}

// dpost -> dpre given the post-activation values.
void tanh_backward_inplace(const Tensor3& post, Tensor3& d) {
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] *= 1.0 - post.v[i] * post.v[i];
}

inline int pool_lo(int i, int in, int out) { return (i * in) / out; }
inline int pool_hi(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }

void adaptive_avg_pool(const Tensor3& in, int out_h, int out_w, Tensor3& out) {
  out.resize(in.c, out_h, out_w);
  for (int c = 0; c < in.c; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int ys = pool_lo(oy, in.h, out_h), ye = pool_hi(oy, in.h, out_h);
      for (int ox = 0; ox < out_w; ++ox) {
        const int xs = pool_lo(ox, in.w, out_w), xe = pool_hi(ox, in.w, out_w);
        double sum = 0.0;
        for (int y = ys; y < ye; ++y)
          for (int x = xs; x < xe; ++x) sum += in.at(c, y, x);
        out.at(c, oy, ox) = sum / double((ye - ys) * (xe - xs));
      }
    }
  }
}

void adaptive_avg_pool_backward(const Tensor3& dout, int in_h, int in_w, Tensor3& din) {
  // din must be pre-sized; gradients accumulate.
  for (int c = 0; c < dout.c; ++c) {
    for (int oy = 0; oy < dout.h; ++oy) {
      const int ys = pool_lo(oy, in_h, dout.h), ye = pool_hi(oy, in_h, dout.h);
      for (int ox = 0; ox < dout.w; ++ox) {
        const int xs = pool_lo(ox, in_w, dout.w), xe = pool_hi(ox, in_w, dout.w);
        const double g = dout.at(c, oy, ox) / double((ye - ys) * (xe - xs));
        for (int y = ys; y < ye; ++y)
          for (int x = xs; x < xe; ++x) din.at(c, y, x) += g;
      }
    }
  }
}

void dense_forward(const DenseLayer& l, const std::vector<double>& x,
                   std::vector<double>& out) {
  out.assign(l.out_n, 0.0);
  for (int o = 0; o < l.out_n; ++o) {
    const double* wr = l.w.data() + std::size_t(o) * l.in_n;
    double acc = l.b[o];
    for (int i = 0; i < l.in_n; ++i) acc += wr[i] * x[i];
    out[o] = acc;
  }
}

void dense_backward(const DenseLayer& l, const std::vector<double>& x,
                    const std::vector<double>& dpre, std::vector<double>& dw,
                    std::vector<double>& db, std::vector<double>* dx) {
  if (dx) dx->assign(l.in_n, 0.0);
  for (int o = 0; o < l.out_n; ++o) {
    const double g = dpre[o];
    db[o] += g;
    double* dwr = dw.data() + std::size_t(o) * l.in_n;
    const double* wr = l.w.data() + std::size_t(o) * l.in_n;
    for (int i = 0; i < l.in_n; ++i) dwr[i] += g * x[i];
    if (dx)
      for (int i = 0; i < l.in_n; ++i) (*dx)[i] += wr[i] * g;
  }
}

void branch_forward(const std::array<ConvLayer, 3>& layers, const Tensor3& input,
                    ForwardCache::BranchCache& bc, bool check,
                    const std::string& name) {
  im2col(input, layers[0], kS1, kS1, bc.col1);
  conv_forward_col(layers[0], bc.col1, kS1, kS1, bc.a1);
  if (check) check_finite(bc.a1.v, name + ".conv1");
  tanh_inplace(bc.a1);

  im2col(bc.a1, layers[1], kS2, kS2, bc.col2);
  conv_forward_col(layers[1], bc.col2, kS2, kS2, bc.a2);
  if (check) check_finite(bc.a2.v, name + ".conv2");
  tanh_inplace(bc.a2);

  im2col(bc.a2, layers[2], kS3, kS3, bc.col3);
  conv_forward_col(layers[2], bc.col3, kS3, kS3, bc.a3);
  if (check) check_finite(bc.a3.v, name + ".conv3");
  tanh_inplace(bc.a3);

  adaptive_avg_pool(bc.a1, kS3, kS3, bc.tap);
}

void copy_channels(const Tensor3& src, Tensor3& dst, int dst_ch_offset) {
  std::copy(src.v.begin(), src.v.end(),
            dst.v.begin() + std::size_t(dst_ch_offset) * dst.plane());
}

void slice_channels(const Tensor3& src, int ch_offset, int ch_count, Tensor3& dst) {
  dst.resize(ch_count, src.h, src.w);
  std::copy(src.v.begin() + std::size_t(ch_offset) * src.plane(),
            src.v.begin() + std::size_t(ch_offset + ch_count) * src.plane(),
            dst.v.begin());
}

void check_input_shape(const RefinerInput& input) {
  auto bad = [](const Tensor3& t) {
    return t.c != 3 || t.h != kInputSide || t.w != kInputSide;
  };
  if (bad(input.color) || bad(input.depth))
    throw std::invalid_argument("refiner input must be two 3x100x100 tensors");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

RefinerOutput forward_pass(const RefinerModel& model, const RefinerInput& input,
                           ForwardCache& cache, bool check) {
  check_input_shape(input);

  branch_forward(model.color_branch, input.color, cache.color, check, "color");
  branch_forward(model.depth_branch, input.depth, cache.depth, check, "depth");

  cache.concat.resize(kConcatCh, kS3, kS3);
  copy_channels(cache.color.tap, cache.concat, 0);
  copy_channels(cache.color.a3, cache.concat, 8);
  copy_channels(cache.depth.tap, cache.concat, kBranchCh);
  copy_channels(cache.depth.a3, cache.concat, kBranchCh + 8);

  // 1x1 convolution: the concat tensor already is its own col matrix.
  conv_forward_col(model.fusion, cache.concat.v, kS3, kS3, cache.fa);
  if (check) check_finite(cache.fa.v, "fusion");
  tanh_inplace(cache.fa);

  if (model.pool == HeadPool::GlobalAverage) {
    cache.head.assign(kFusedCh, 0.0);
    const std::size_t plane = cache.fa.plane();
    for (int c = 0; c < kFusedCh; ++c) {
      const double* p = cache.fa.v.data() + std::size_t(c) * plane;
      double sum = 0.0;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      cache.head[c] = sum / double(plane);
    }
  } else {
    cache.head = cache.fa.v;
  }

  dense_forward(model.fc1, cache.head, cache.h1);
  if (check) check_finite(cache.h1, "fc1");
  for (double& v : cache.h1) v = std::tanh(v);

  dense_forward(model.fc2, cache.h1, cache.out);
  if (check) check_finite(cache.out, "fc2");
  for (double& v : cache.out) v = sigmoid(v);

  return RefinerOutput{cache.out[0], cache.out[1], cache.out[2], cache.out[3]};
}

RefinerOutput forward(const RefinerModel& model, const RefinerInput& input) {
  ForwardCache cache;
  return forward_pass(model, input, cache, true);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

namespace {

double smooth_l1_grad(double x) {
  if (x <= -1.0) return -1.0;
  if (x >= 1.0) return 1.0;
  return x;
}

}  // namespace

double loss(const RefinerOutput& pred, const RefinerOutput& gt) {
  const auto p = pred.as_array();
  const auto g = gt.as_array();
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (g[i] <= 0.0)
      throw std::invalid_argument("ground-truth components must be > 0");
    total += smooth_l1((p[i] - g[i]) / g[i]);
  }
  return total;
}

namespace {

enum ParamIndex {
  kColorConv1W = 0,
  kDepthConv1W = 6,
  kFusionW = 12,
  kFusionB = 13,
  kFc1W = 14,
  kFc1B = 15,
  kFc2W = 16,
  kFc2B = 17,
};

void branch_backward(const std::array<ConvLayer, 3>& layers,
                     ForwardCache::BranchCache& bc, ForwardCache& c,
                     const Tensor3& dtap, const Tensor3& da3_in,
                     GradientSet& grads, int g0) {
  // conv3 <- tanh' on a3
  c.da3 = da3_in;
  tanh_backward_inplace(bc.a3, c.da3);
  conv_backward_col(layers[2], bc.col3, c.da3, grads[g0 + 4], grads[g0 + 5], &c.dcol);
  c.da2.resize(layers[2].in_c, kS2, kS2);
  std::fill(c.da2.v.begin(), c.da2.v.end(), 0.0);
  col2im_accumulate(c.dcol, layers[2], kS3, kS3, c.da2);

  // conv2 <- tanh' on a2
  tanh_backward_inplace(bc.a2, c.da2);
  conv_backward_col(layers[1], bc.col2, c.da2, grads[g0 + 2], grads[g0 + 3], &c.dcol);
  c.da1.resize(layers[1].in_c, kS1, kS1);
  std::fill(c.da1.v.begin(), c.da1.v.end(), 0.0);
  col2im_accumulate(c.dcol, layers[1], kS2, kS2, c.da1);

  // the early tap feeds gradient into a1 as well
  adaptive_avg_pool_backward(dtap, kS1, kS1, c.da1);

  // conv1 <- tanh' on a1; input gradients are not needed
  tanh_backward_inplace(bc.a1, c.da1);
  conv_backward_col(layers[0], bc.col1, c.da1, grads[g0], grads[g0 + 1], nullptr);
}

}  // namespace

double backward_accumulate(const RefinerModel& model, const RefinerInput& input,
                           const RefinerOutput& gt, ForwardCache& cache,
                           GradientSet& grads, bool backbone_grads) {
  const RefinerOutput pred = forward_pass(model, input, cache, false);
  const double l = loss(pred, gt);

  // dL/d(sigmoid output), then through the sigmoid.
  const auto p = pred.as_array();
  const auto g = gt.as_array();
  cache.dout.assign(4, 0.0);
  for (int i = 0; i < 4; ++i) {
    const double x = (p[i] - g[i]) / g[i];
    const double dl_dp = smooth_l1_grad(x) / g[i];
    cache.dout[i] = dl_dp * p[i] * (1.0 - p[i]);
  }

  dense_backward(model.fc2, cache.h1, cache.dout, grads[kFc2W], grads[kFc2B],
                 &cache.dh1);

  for (int i = 0; i < model.fc1.out_n; ++i)
    cache.dh1[i] *= 1.0 - cache.h1[i] * cache.h1[i];
  dense_backward(model.fc1, cache.head, cache.dh1, grads[kFc1W], grads[kFc1B],
                 &cache.dhead);

  cache.dfa.resize(kFusedCh, kS3, kS3);
  if (model.pool == HeadPool::GlobalAverage) {
    const std::size_t plane = cache.dfa.plane();
    for (int c = 0; c < kFusedCh; ++c) {
      const double gval = cache.dhead[c] / double(plane);
      double* dp = cache.dfa.v.data() + std::size_t(c) * plane;
      std::fill(dp, dp + plane, gval);
    }
  } else {
    cache.dfa.v = cache.dhead;
  }

  tanh_backward_inplace(cache.fa, cache.dfa);
  conv_backward_col(model.fusion, cache.concat.v, cache.dfa, grads[kFusionW],
                    grads[kFusionB], backbone_grads ? &cache.dcol : nullptr);
  if (!backbone_grads) return l;

  cache.dconcat.resize(kConcatCh, kS3, kS3);
  cache.dconcat.v = cache.dcol;  // 1x1 conv: dcol is the concat gradient

  Tensor3 dtap, da3;
  slice_channels(cache.dconcat, 0, 8, dtap);
  slice_channels(cache.dconcat, 8, 32, da3);
  branch_backward(model.color_branch, cache.color, cache, dtap, da3, grads,
                  kColorConv1W);
  slice_channels(cache.dconcat, kBranchCh, 8, dtap);
  slice_channels(cache.dconcat, kBranchCh + 8, 32, da3);
  branch_backward(model.depth_branch, cache.depth, cache, dtap, da3, grads,
                  kDepthConv1W);
  return l;
}

GradientSet backward(const RefinerModel& model, const RefinerInput& input,
                     const RefinerOutput& gt) {
  GradientSet grads = zero_gradients(model);
  ForwardCache cache;
  backward_accumulate(model, input, gt, cache, grads, true);
  for (const auto& g : grads)
    check_finite(g, "gradient");
  return grads;
}

double max_rel_error_vs_fd(const RefinerModel& model, const GradientSet& analytic,
                           const RefinerInput& input, const RefinerOutput& gt,
                           double eps, std::uint64_t sample_seed, int min_samples) {
  RefinerModel probe = model;
  auto refs = probe.parameters();
  std::size_t total = 0;
  for (const auto& r : refs) total += r.data->size();

  Rng rng(sample_seed);
  ForwardCache cache;
  double max_rel = 0.0;
  for (std::size_t t = 0; t < refs.size(); ++t) {
    auto& data = *refs[t].data;
    const std::size_t sz = data.size();
    const int ns = std::max<int>(2, int(std::llround(double(min_samples) * double(sz) / double(total))));
    for (int s = 0; s < ns; ++s) {
      const std::size_t i = std::size_t(rng.uniform_int(0, int(sz - 1)));
      const double orig = data[i];
      data[i] = orig + eps;
      const double lp = loss(forward_pass(probe, input, cache, false), gt);
      data[i] = orig - eps;
      const double lm = loss(forward_pass(probe, input, cache, false), gt);
      data[i] = orig;
      const double fd = (lp - lm) / (2.0 * eps);
      const double an = analytic[t][i];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-7});
      max_rel = std::max(max_rel, std::abs(an - fd) / denom);
    }
  }
  return max_rel;
}

double grad_check(const RefinerModel& model, const RefinerInput& input,
                  const RefinerOutput& gt, double eps, std::uint64_t sample_seed) {
  if (eps < 1e-6 || eps > 1e-3)
    throw std::invalid_argument("grad check eps must lie in [1e-6, 1e-3]");
  const GradientSet analytic = backward(model, input, gt);
  return max_rel_error_vs_fd(model, analytic, input, gt, eps, sample_seed, 200);
}

void TrainConfig::validate() const {
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr_start > lr_end && lr_end > 0.0))
    throw std::invalid_argument("need lr_start > lr_end > 0");
  if (backbone_freeze_epochs < 0)
    throw std::invalid_argument("freeze epochs must be >= 0");
}

double lr_at(const TrainConfig& cfg, long step, long total_steps) {
  if (total_steps <= 1) return cfg.lr_start;
  const long s = std::clamp(step, 0L, total_steps - 1);
  const double t = double(s) / double(total_steps - 1);
  return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * t;
}

RefinerModel train(RefinerModel model, const std::vector<TrainSample>& data,
                   const TrainConfig& cfg, TrainTrace* trace,
                   const std::function<void(int, const RefinerModel&)>& on_epoch) {
  cfg.validate();
  if (data.size() < std::size_t(cfg.batch))
    throw std::invalid_argument("dataset smaller than one mini-batch");

  auto refs = model.parameters();
  GradientSet grads = zero_gradients(model);
  ForwardCache cache;

  const long n = long(data.size());
  const long steps_per_epoch = (n + cfg.batch - 1) / cfg.batch;
  const long total_steps = steps_per_epoch * cfg.epochs;
  long step = 0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);
    const bool frozen = epoch <= cfg.backbone_freeze_epochs;

    double epoch_loss = 0.0;
    double first_lr = 0.0, last_lr = 0.0;
    long batches = 0;
    for (long start = 0; start < n; start += cfg.batch) {
      const long bs = std::min<long>(cfg.batch, n - start);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);

      double batch_loss = 0.0;
      for (long i = 0; i < bs; ++i) {
        const TrainSample& s = data[order[std::size_t(start + i)]];
        batch_loss += backward_accumulate(model, s.input, s.gt, cache, grads, !frozen);
      }
      batch_loss /= double(bs);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("training diverged at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batches + 1));

      const double lr = lr_at(cfg, step, total_steps);
      if (batches == 0) first_lr = lr;
      last_lr = lr;
      const double scale = lr / double(bs);
      for (std::size_t t = 0; t < refs.size(); ++t) {
        if (frozen && refs[t].backbone) continue;
        auto& p = *refs[t].data;
        const auto& g = grads[t];
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * g[i];
      }
      ++step;
      ++batches;
      epoch_loss += batch_loss;
    }

    if (trace) {
      trace->epoch_mean_loss.push_back(epoch_loss / double(batches));
      trace->epoch_first_lr.push_back(first_lr);
      trace->epoch_last_lr.push_back(last_lr);
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  return model;
}

}  // namespace tsdm::refiner
