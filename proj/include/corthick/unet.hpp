// unet.hpp - the small 3D convolutional encoder-decoder that regresses a
// velocity field from stacked (WM, WM+GM) partial-volume inputs.
//
// Architecture, per resolution level: two 3x3x3 convs with leaky
// rectification, downsampling by strided conv, a two-conv bottleneck, then
// nearest-neighbor upsampling + conv, skip concatenation, and a skip-merge
// conv per decoder level. A final linear 1x1x1 head emits three channels,
// scaled by a learnable global gain initialized to 0.1 so training starts
// near the identity transform. Feature depth is constant across levels.
//
// Forward and reverse passes are written out by hand; the reverse pass is
// exact (checked against finite differences in the test suite). Parameters
// live in one flat vector so the optimizer, serialization, and gradient
// checks all see a single contiguous view.
//
// Convolutions use zero padding, so the network is shift-equivariant only up
// to border effects: shifting the patch contents shifts the output except
// within a receptive field of the faces.

#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corthick/grid.hpp"
#include "corthick/io.hpp"

namespace corthick {

struct UnetSpec {
  int pooling_steps = 2;
  int base_features = 8;
  int in_channels = 2;
  int out_channels = 3;
  double leaky_slope = 0.01;

  int divisor() const { return 1 << pooling_steps; }

  void validate() const {
    detail::require(pooling_steps >= 1 && pooling_steps <= 4,
                    "UnetSpec.pooling_steps must be in [1, 4]");
    detail::require(base_features >= 1 && base_features <= 64,
                    "UnetSpec.base_features must be in [1, 64]");
    detail::require(in_channels >= 1 && out_channels >= 1,
                    "UnetSpec: channel counts must be >= 1");
    detail::require(leaky_slope >= 0.0 && leaky_slope < 1.0,
                    "UnetSpec.leaky_slope must be in [0, 1)");
  }

  friend bool operator==(const UnetSpec& a, const UnetSpec& b) {
    return a.pooling_steps == b.pooling_steps && a.base_features == b.base_features &&
           a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
           a.leaky_slope == b.leaky_slope;
  }
};

// Channel-planar activation map: [c][z][y][x], x fastest within a channel.
struct FeatureMap {
  int channels = 0;
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> v;

  FeatureMap() = default;
  FeatureMap(int c, int x, int y, int z)
      : channels(c), nx(x), ny(y), nz(z),
        v(static_cast<std::size_t>(c) * x * y * z, 0.0) {}

  std::size_t plane() const { return static_cast<std::size_t>(nx) * ny * nz; }
  double* channel(int c) { return v.data() + c * plane(); }
  const double* channel(int c) const { return v.data() + c * plane(); }
};

struct ConvDesc {
  std::string name;
  int in_c = 0, out_c = 0;
  int kernel = 3;  // 3 or 1
  int stride = 1;  // 1 or 2
  std::size_t w_offset = 0, b_offset = 0;

  std::size_t w_count() const {
    return static_cast<std::size_t>(out_c) * in_c * kernel * kernel * kernel;
  }
};

struct UnetModel {
  UnetSpec spec;
  std::vector<double> params;
  std::vector<ConvDesc> convs;  // execution order: encoder, bottleneck, decoder, head
  std::size_t gain_offset = 0;

  double gain() const { return params[gain_offset]; }

  // Conv indices within `convs` for one encoder/decoder level.
  int enc_a(int level) const { return 3 * level; }
  int enc_b(int level) const { return 3 * level + 1; }
  int down(int level) const { return 3 * level + 2; }
  int bot_a() const { return 3 * spec.pooling_steps; }
  int bot_b() const { return 3 * spec.pooling_steps + 1; }
  int up(int level) const {
    return 3 * spec.pooling_steps + 2 + 2 * (spec.pooling_steps - 1 - level);
  }
  int merge(int level) const { return up(level) + 1; }
  int head() const { return static_cast<int>(convs.size()) - 1; }
};

namespace detail {

inline void push_conv(UnetModel& m, const std::string& name, int in_c, int out_c,
                      int kernel, int stride, std::size_t& cursor) {
  ConvDesc d;
  d.name = name;
  d.in_c = in_c;
  d.out_c = out_c;
  d.kernel = kernel;
  d.stride = stride;
  d.w_offset = cursor;
  cursor += d.w_count();
  d.b_offset = cursor;
  cursor += out_c;
  m.convs.push_back(d);
}

} // namespace detail

inline UnetModel build_unet(const UnetSpec& spec, std::uint64_t seed) {
  spec.validate();
  UnetModel m;
  m.spec = spec;
  const int F = spec.base_features;
  const int P = spec.pooling_steps;
  std::size_t cursor = 0;
  for (int l = 0; l < P; ++l) {
    const std::string tag = "enc" + std::to_string(l);
    detail::push_conv(m, tag + ".a", l == 0 ? spec.in_channels : F, F, 3, 1, cursor);
    detail::push_conv(m, tag + ".b", F, F, 3, 1, cursor);
    detail::push_conv(m, "down" + std::to_string(l), F, F, 3, 2, cursor);
  }
  detail::push_conv(m, "bot.a", F, F, 3, 1, cursor);
  detail::push_conv(m, "bot.b", F, F, 3, 1, cursor);
  for (int l = P - 1; l >= 0; --l) {
    detail::push_conv(m, "up" + std::to_string(l), F, F, 3, 1, cursor);
    detail::push_conv(m, "merge" + std::to_string(l), 2 * F, F, 3, 1, cursor);
  }
  detail::push_conv(m, "head", F, spec.out_channels, 1, 1, cursor);
  m.gain_offset = cursor;
  cursor += 1;

  m.params.assign(cursor, 0.0);
  std::mt19937_64 rng(seed);
  const double act_gain = std::sqrt(2.0 / (1.0 + spec.leaky_slope * spec.leaky_slope));
  for (const ConvDesc& d : m.convs) {
    const double fan_in = static_cast<double>(d.in_c) * d.kernel * d.kernel * d.kernel;
    const double bound = act_gain * std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < d.w_count(); ++i) m.params[d.w_offset + i] = dist(rng);
    // biases stay zero
  }
  m.params[m.gain_offset] = 0.1;
  return m;
}

namespace detail {

inline int conv_out_extent(int n, int kernel, int stride) {
  const int pad = kernel == 3 ? 1 : 0;
  return (n + 2 * pad - kernel) / stride + 1;
}

inline FeatureMap conv_forward(const ConvDesc& d, const double* params,
                               const FeatureMap& in) {
  const int pad = d.kernel == 3 ? 1 : 0;
  FeatureMap out(d.out_c, conv_out_extent(in.nx, d.kernel, d.stride),
                 conv_out_extent(in.ny, d.kernel, d.stride),
                 conv_out_extent(in.nz, d.kernel, d.stride));
  const double* w = params + d.w_offset;
  const double* b = params + d.b_offset;
  const std::size_t kvol = static_cast<std::size_t>(d.kernel) * d.kernel * d.kernel;
  for (int oc = 0; oc < d.out_c; ++oc) {
    double* op = out.channel(oc);
    for (int oz = 0; oz < out.nz; ++oz)
      for (int oy = 0; oy < out.ny; ++oy)
        for (int ox = 0; ox < out.nx; ++ox) {
          double acc = b[oc];
          for (int ic = 0; ic < d.in_c; ++ic) {
            const double* ip = in.channel(ic);
            const double* wk = w + (oc * d.in_c + ic) * kvol;
            for (int kz = 0; kz < d.kernel; ++kz) {
              const int iz = oz * d.stride + kz - pad;
              if (iz < 0 || iz >= in.nz) continue;
              for (int ky = 0; ky < d.kernel; ++ky) {
                const int iy = oy * d.stride + ky - pad;
                if (iy < 0 || iy >= in.ny) continue;
                const double* row = ip + (static_cast<std::size_t>(iz) * in.ny + iy) * in.nx;
                const double* wrow = wk + (kz * d.kernel + ky) * d.kernel;
                for (int kx = 0; kx < d.kernel; ++kx) {
                  const int ix = ox * d.stride + kx - pad;
                  if (ix < 0 || ix >= in.nx) continue;
                  acc += wrow[kx] * row[ix];
                }
              }
            }
          }
          op[(static_cast<std::size_t>(oz) * out.ny + oy) * out.nx + ox] = acc;
        }
  }
  return out;
}

// Accumulates parameter gradients and returns the input gradient.
inline FeatureMap conv_backward(const ConvDesc& d, const double* params,
                                const FeatureMap& in, const FeatureMap& g_out,
                                double* g_params) {
  const int pad = d.kernel == 3 ? 1 : 0;
  FeatureMap g_in(in.channels, in.nx, in.ny, in.nz);
  const double* w = params + d.w_offset;
  double* g_w = g_params + d.w_offset;
  double* g_b = g_params + d.b_offset;
  const std::size_t kvol = static_cast<std::size_t>(d.kernel) * d.kernel * d.kernel;
  for (int oc = 0; oc < d.out_c; ++oc) {
    const double* gp = g_out.channel(oc);
    for (int oz = 0; oz < g_out.nz; ++oz)
      for (int oy = 0; oy < g_out.ny; ++oy)
        for (int ox = 0; ox < g_out.nx; ++ox) {
          const double g = gp[(static_cast<std::size_t>(oz) * g_out.ny + oy) * g_out.nx + ox];
          if (g == 0.0) continue;
          g_b[oc] += g;
          for (int ic = 0; ic < d.in_c; ++ic) {
            const double* ip = in.channel(ic);
            double* gip = g_in.channel(ic);
            const std::size_t koff = (oc * d.in_c + ic) * kvol;
            for (int kz = 0; kz < d.kernel; ++kz) {
              const int iz = oz * d.stride + kz - pad;
              if (iz < 0 || iz >= in.nz) continue;
              for (int ky = 0; ky < d.kernel; ++ky) {
                const int iy = oy * d.stride + ky - pad;
                if (iy < 0 || iy >= in.ny) continue;
                const std::size_t rowoff = (static_cast<std::size_t>(iz) * in.ny + iy) * in.nx;
                const std::size_t wrow = koff + (kz * d.kernel + ky) * d.kernel;
                for (int kx = 0; kx < d.kernel; ++kx) {
                  const int ix = ox * d.stride + kx - pad;
                  if (ix < 0 || ix >= in.nx) continue;
                  g_w[wrow + kx] += g * ip[rowoff + ix];
                  gip[rowoff + ix] += g * w[wrow + kx];
                }
              }
            }
          }
        }
  }
  return g_in;
}

inline void leaky_forward(FeatureMap& f, double slope) {
  for (double& x : f.v)
    if (x < 0.0) x *= slope;
}

// Backward through the rectification given post-activation values: the sign
// of the output matches the sign of the preactivation (slope > 0).
inline void leaky_backward(FeatureMap& g, const FeatureMap& out, double slope) {
  for (std::size_t i = 0; i < g.v.size(); ++i)
    if (out.v[i] <= 0.0) g.v[i] *= slope;
}

inline FeatureMap upsample_nearest(const FeatureMap& in) {
  FeatureMap out(in.channels, 2 * in.nx, 2 * in.ny, 2 * in.nz);
  for (int c = 0; c < in.channels; ++c) {
    const double* ip = in.channel(c);
    double* op = out.channel(c);
    for (int z = 0; z < out.nz; ++z)
      for (int y = 0; y < out.ny; ++y)
        for (int x = 0; x < out.nx; ++x)
          op[(static_cast<std::size_t>(z) * out.ny + y) * out.nx + x] =
              ip[(static_cast<std::size_t>(z / 2) * in.ny + y / 2) * in.nx + x / 2];
  }
  return out;
}

inline FeatureMap upsample_backward(const FeatureMap& g_out) {
  FeatureMap g_in(g_out.channels, g_out.nx / 2, g_out.ny / 2, g_out.nz / 2);
  for (int c = 0; c < g_out.channels; ++c) {
    const double* gp = g_out.channel(c);
    double* gi = g_in.channel(c);
    for (int z = 0; z < g_out.nz; ++z)
      for (int y = 0; y < g_out.ny; ++y)
        for (int x = 0; x < g_out.nx; ++x)
          gi[(static_cast<std::size_t>(z / 2) * g_in.ny + y / 2) * g_in.nx + x / 2] +=
              gp[(static_cast<std::size_t>(z) * g_out.ny + y) * g_out.nx + x];
  }
  return g_in;
}

inline FeatureMap concat(const FeatureMap& a, const FeatureMap& b) {
  FeatureMap out(a.channels + b.channels, a.nx, a.ny, a.nz);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

} // namespace detail

// Everything the reverse pass needs: per-stage activations, kept in the
// order the forward pass produced them.
struct UnetTape {
  GridMeta meta;
  FeatureMap input;
  std::vector<FeatureMap> enc_x;   // x_l: input of enc_a at level l (x_0 == input)
  std::vector<FeatureMap> enc_a;   // activated output of enc_a
  std::vector<FeatureMap> skips;   // s_l: activated output of enc_b
  std::vector<FeatureMap> downs;   // x_{l+1}: activated output of down l
  FeatureMap bot1, bot2;
  std::vector<FeatureMap> ups;     // u_l: upsampled map entering up-conv l
  std::vector<FeatureMap> up_out;  // c_l: activated up-conv output
  std::vector<FeatureMap> dec;     // d_l: activated merge output
  FeatureMap head_out;             // pre-gain head output
};

inline std::pair<VectorField, UnetTape> unet_forward(const UnetModel& model,
                                                     const ScalarVolume& wm,
                                                     const ScalarVolume& wmgm) {
  const UnetSpec& spec = model.spec;
  spec.validate();
  detail::require(wm.meta.dims == wmgm.meta.dims, "unet_forward: input dims differ");
  for (int a = 0; a < 3; ++a)
    detail::require(wm.meta.dims[a] % spec.divisor() == 0,
                    "unet_forward: dim " + std::to_string(wm.meta.dims[a]) +
                        " not divisible by 2^pooling_steps = " +
                        std::to_string(spec.divisor()));
  const int P = spec.pooling_steps;
  const double slope = spec.leaky_slope;
  const double* par = model.params.data();

  UnetTape tape;
  tape.meta = wm.meta;
  tape.input = FeatureMap(2, wm.meta.nx(), wm.meta.ny(), wm.meta.nz());
  std::copy(wm.data.begin(), wm.data.end(), tape.input.channel(0));
  std::copy(wmgm.data.begin(), wmgm.data.end(), tape.input.channel(1));

  FeatureMap x = tape.input;
  for (int l = 0; l < P; ++l) {
    tape.enc_x.push_back(x);
    FeatureMap a = detail::conv_forward(model.convs[model.enc_a(l)], par, x);
    detail::leaky_forward(a, slope);
    tape.enc_a.push_back(a);
    FeatureMap s = detail::conv_forward(model.convs[model.enc_b(l)], par, a);
    detail::leaky_forward(s, slope);
    tape.skips.push_back(s);
    x = detail::conv_forward(model.convs[model.down(l)], par, s);
    detail::leaky_forward(x, slope);
    tape.downs.push_back(x);
  }
  FeatureMap b1 = detail::conv_forward(model.convs[model.bot_a()], par, x);
  detail::leaky_forward(b1, slope);
  tape.bot1 = b1;
  FeatureMap d = detail::conv_forward(model.convs[model.bot_b()], par, b1);
  detail::leaky_forward(d, slope);
  tape.bot2 = d;

  tape.ups.resize(P);
  tape.up_out.resize(P);
  tape.dec.resize(P);
  for (int l = P - 1; l >= 0; --l) {
    FeatureMap u = detail::upsample_nearest(d);
    tape.ups[l] = u;
    FeatureMap c = detail::conv_forward(model.convs[model.up(l)], par, u);
    detail::leaky_forward(c, slope);
    tape.up_out[l] = c;
    FeatureMap k = detail::concat(c, tape.skips[l]);
    d = detail::conv_forward(model.convs[model.merge(l)], par, k);
    detail::leaky_forward(d, slope);
    tape.dec[l] = d;
  }
  tape.head_out = detail::conv_forward(model.convs[model.head()], par, d);

  const double gain = model.gain();
  VectorField z(wm.meta);
  const std::size_t n = wm.meta.voxels();
  for (std::size_t i = 0; i < n; ++i) {
    z.data[i].x = gain * tape.head_out.v[i];
    z.data[i].y = gain * tape.head_out.v[n + i];
    z.data[i].z = gain * tape.head_out.v[2 * n + i];
  }
  return {std::move(z), std::move(tape)};
}

struct UnetGrads {
  std::vector<double> params;  // same layout as UnetModel.params
  FeatureMap input;            // gradient w.r.t. the stacked (wm, wmgm) input
};

inline UnetGrads unet_backward(const UnetModel& model, const UnetTape& tape,
                               const VectorField& g_z) {
  const UnetSpec& spec = model.spec;
  detail::require(tape.meta == g_z.meta,
                  "unet_backward: cotangent dims do not match the taped forward");
  const int P = spec.pooling_steps;
  const double slope = spec.leaky_slope;
  const double* par = model.params.data();

  UnetGrads grads;
  grads.params.assign(model.params.size(), 0.0);
  double* gpar = grads.params.data();

  const std::size_t n = tape.meta.voxels();
  FeatureMap g_head(spec.out_channels, tape.meta.nx(), tape.meta.ny(), tape.meta.nz());
  const double gain = model.gain();
  double g_gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_head.v[i] = gain * g_z.data[i].x;
    g_head.v[n + i] = gain * g_z.data[i].y;
    g_head.v[2 * n + i] = gain * g_z.data[i].z;
    g_gain += g_z.data[i].x * tape.head_out.v[i] + g_z.data[i].y * tape.head_out.v[n + i] +
              g_z.data[i].z * tape.head_out.v[2 * n + i];
  }
  gpar[model.gain_offset] = g_gain;

  FeatureMap g =
      detail::conv_backward(model.convs[model.head()], par, tape.dec[0], g_head, gpar);

  std::vector<FeatureMap> g_skip(P);
  for (int l = 0; l < P; ++l) {
    detail::leaky_backward(g, tape.dec[l], slope);
    FeatureMap k = detail::concat(tape.up_out[l], tape.skips[l]);
    FeatureMap g_k =
        detail::conv_backward(model.convs[model.merge(l)], par, k, g, gpar);
    // Split the concatenation gradient.
    FeatureMap g_c(tape.up_out[l].channels, g_k.nx, g_k.ny, g_k.nz);
    g_skip[l] = FeatureMap(tape.skips[l].channels, g_k.nx, g_k.ny, g_k.nz);
    std::copy(g_k.v.begin(), g_k.v.begin() + g_c.v.size(), g_c.v.begin());
    std::copy(g_k.v.begin() + g_c.v.size(), g_k.v.end(), g_skip[l].v.begin());
    detail::leaky_backward(g_c, tape.up_out[l], slope);
    FeatureMap g_u =
        detail::conv_backward(model.convs[model.up(l)], par, tape.ups[l], g_c, gpar);
    g = detail::upsample_backward(g_u);
  }

  detail::leaky_backward(g, tape.bot2, slope);
  g = detail::conv_backward(model.convs[model.bot_b()], par, tape.bot1, g, gpar);
  detail::leaky_backward(g, tape.bot1, slope);
  g = detail::conv_backward(model.convs[model.bot_a()], par, tape.downs[P - 1], g, gpar);

  for (int l = P - 1; l >= 0; --l) {
    detail::leaky_backward(g, tape.downs[l], slope);
    FeatureMap g_s =
        detail::conv_backward(model.convs[model.down(l)], par, tape.skips[l], g, gpar);
    for (std::size_t i = 0; i < g_s.v.size(); ++i) g_s.v[i] += g_skip[l].v[i];
    detail::leaky_backward(g_s, tape.skips[l], slope);
    FeatureMap g_a =
        detail::conv_backward(model.convs[model.enc_b(l)], par, tape.enc_a[l], g_s, gpar);
    detail::leaky_backward(g_a, tape.enc_a[l], slope);
    g = detail::conv_backward(model.convs[model.enc_a(l)], par, tape.enc_x[l], g_a, gpar);
  }
  grads.input = std::move(g);
  return grads;
}

// ---------------------------------------------------------------------------
// Checkpoint container: 8-byte magic, length-prefixed JSON manifest, raw
// little-endian float64 parameter payload in manifest tensor order.

inline constexpr char kNetMagic[8] = {'M', 'N', 'E', 'T', 0, 0, 0, 1};

inline void save_model(const UnetModel& model, const std::string& path, int epoch = 0,
                       double val_loss = 0.0, const double* icc = nullptr) {
  nlohmann::json manifest;
  manifest["dtype"] = "f64";
  manifest["epoch"] = epoch;
  manifest["val_loss"] = val_loss;
  if (icc)
    manifest["icc"] = *icc;
  else
    manifest["icc"] = nullptr;
  manifest["spec"] = {{"pooling_steps", model.spec.pooling_steps},
                      {"base_features", model.spec.base_features},
                      {"in_channels", model.spec.in_channels},
                      {"out_channels", model.spec.out_channels},
                      {"leaky_slope", model.spec.leaky_slope}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const ConvDesc& d : model.convs) {
    tensors.push_back({{"name", d.name + ".w"},
                       {"shape", {d.out_c, d.in_c, d.kernel, d.kernel, d.kernel}}});
    tensors.push_back({{"name", d.name + ".b"}, {"shape", {d.out_c}}});
  }
  tensors.push_back({{"name", "gain"}, {"shape", {1}}});
  manifest["tensors"] = tensors;
  const std::string header = manifest.dump();
  const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  detail::require(out.good(), "cannot open file for writing: " + path);
  out.write(kNetMagic, 8);
  out.write(reinterpret_cast<const char*>(&header_len), 4);
  out.write(header.data(), header.size());
  out.write(reinterpret_cast<const char*>(model.params.data()),
            static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  out.flush();
  detail::require(out.good(), "write failure: " + path);
}

struct LoadedModel {
  UnetModel model;
  int epoch = 0;
  double val_loss = 0.0;
  bool has_icc = false;
  double icc = 0.0;
};

inline LoadedModel load_model(const std::string& path) {
  const std::vector<char> bytes = detail::read_file_bytes(path);
  detail::require(bytes.size() >= 12 && std::memcmp(bytes.data(), kNetMagic, 8) == 0,
                  path + ": bad checkpoint magic");
  std::uint32_t header_len;
  std::memcpy(&header_len, bytes.data() + 8, 4);
  detail::require(bytes.size() >= 12 + header_len, path + ": truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": checkpoint manifest is not valid JSON: " +
                             e.what());
  }
  detail::require(manifest.value("dtype", "") == "f64",
                  path + ": checkpoint dtype must be f64");

  LoadedModel loaded;
  UnetSpec spec;
  const auto& js = manifest.at("spec");
  spec.pooling_steps = js.at("pooling_steps").get<int>();
  spec.base_features = js.at("base_features").get<int>();
  spec.in_channels = js.at("in_channels").get<int>();
  spec.out_channels = js.at("out_channels").get<int>();
  spec.leaky_slope = js.at("leaky_slope").get<double>();
  loaded.model = build_unet(spec, 0);
  loaded.epoch = manifest.value("epoch", 0);
  loaded.val_loss = manifest.value("val_loss", 0.0);
  if (manifest.contains("icc") && !manifest["icc"].is_null()) {
    loaded.has_icc = true;
    loaded.icc = manifest["icc"].get<double>();
  }

  const std::size_t expected = 12 + header_len + loaded.model.params.size() * sizeof(double);
  detail::require(bytes.size() == expected,
                  path + ": parameter payload size mismatch (file " +
                      std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + ")");
  std::memcpy(loaded.model.params.data(), bytes.data() + 12 + header_len,
              loaded.model.params.size() * sizeof(double));
  for (double p : loaded.model.params)
    detail::require(std::isfinite(p), path + ": non-finite parameter in payload");
  return loaded;
}

} // namespace corthick
