#include "resshift/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "conv_ops.hpp"
#include "json.hpp"

namespace resshift {

namespace {

double silu(double x) {
  return x / (1.0 + std::exp(-x));
}

double silu_derivative(double x) {
  const double sig = 1.0 / (1.0 + std::exp(-x));
  return sig * (1.0 + x * (1.0 - sig));
}

void apply_activation(Activation act, const double* pre, double* post, std::size_t n) {
  switch (act) {
    case Activation::None:
      if (post != pre) std::memcpy(post, pre, n * sizeof(double));
      break;
    case Activation::Silu:
      for (std::size_t i = 0; i < n; ++i) post[i] = silu(pre[i]);
      break;
  }
}

void activation_backward(Activation act, const double* pre, const double* d_post, double* d_pre,
                         std::size_t n) {
  switch (act) {
    case Activation::None:
      if (d_pre != d_post) std::memcpy(d_pre, d_post, n * sizeof(double));
      break;
    case Activation::Silu:
      for (std::size_t i = 0; i < n; ++i) d_pre[i] = d_post[i] * silu_derivative(pre[i]);
      break;
  }
}

struct Tape {
  // inputs[l] feeds layer l; preacts[l] is layer l before its activation
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> preacts;
  int h = 0;
  int w = 0;
};

const char* kind_name(LayerKind k) {
  return k == LayerKind::Dense ? "dense" : "conv3x3";
}

const char* act_name(Activation a) {
  return a == Activation::None ? "none" : "silu";
}

LayerKind kind_from_name(const std::string& n) {
  if (n == "dense") return LayerKind::Dense;
  if (n == "conv3x3") return LayerKind::Conv3x3;
  throw std::runtime_error("checkpoint: unknown layer kind '" + n + "'");
}

Activation act_from_name(const std::string& n) {
  if (n == "none") return Activation::None;
  if (n == "silu") return Activation::Silu;
  throw std::runtime_error("checkpoint: unknown activation '" + n + "'");
}

}  // namespace

std::size_t LayerSpec::weight_count() const {
  const std::size_t taps = kind == LayerKind::Conv3x3 ? 9 : 1;
  return taps * static_cast<std::size_t>(in_channels) * out_channels;
}

std::size_t LayerSpec::param_count() const {
  return weight_count() + static_cast<std::size_t>(out_channels);
}

std::size_t PredictorLayout::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

void PredictorLayout::validate() const {
  if (data_channels < 1) throw std::invalid_argument("PredictorLayout: data_channels must be >= 1");
  if (t_embed_dim < 1) throw std::invalid_argument("PredictorLayout: t_embed_dim must be >= 1");
  if (layers.empty()) throw std::invalid_argument("PredictorLayout: no layers");
  int expect = input_channels();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_channels < 1 || l.out_channels < 1) {
      throw std::invalid_argument("PredictorLayout: layer " + std::to_string(i) +
                                  " widths must be >= 1");
    }
    if (l.in_channels != expect) {
      throw std::invalid_argument("PredictorLayout: layer " + std::to_string(i) + " expects " +
                                  std::to_string(expect) + " input channels, has " +
                                  std::to_string(l.in_channels));
    }
    expect = l.out_channels;
  }
  if (expect != data_channels) {
    throw std::invalid_argument("PredictorLayout: final layer must emit data_channels=" +
                                std::to_string(data_channels) + " channels, emits " +
                                std::to_string(expect));
  }
}

PredictorLayout PredictorLayout::reference(int data_channels, int hidden, int t_embed_dim) {
  PredictorLayout lay;
  lay.data_channels = data_channels;
  lay.t_embed_dim = t_embed_dim;
  lay.identity_skip = true;
  const int in = lay.input_channels();
  lay.layers = {
      {LayerKind::Dense, in, hidden, Activation::Silu},
      {LayerKind::Conv3x3, hidden, hidden, Activation::Silu},
      {LayerKind::Conv3x3, hidden, hidden, Activation::Silu},
      {LayerKind::Dense, hidden, data_channels, Activation::None},
  };
  lay.validate();
  return lay;
}

PredictorParams PredictorParams::zeros(const PredictorLayout& layout) {
  layout.validate();
  PredictorParams p;
  p.layout = layout;
  p.theta.assign(layout.param_count(), 0.0);
  return p;
}

PredictorParams PredictorParams::initialized(const PredictorLayout& layout, Prng& rng) {
  PredictorParams p = zeros(layout);
  std::size_t off = 0;
  for (std::size_t li = 0; li < layout.layers.size(); ++li) {
    const auto& l = layout.layers[li];
    const bool is_head = li + 1 == layout.layers.size();
    if (!is_head) {
      const std::size_t fan_in =
          (l.kind == LayerKind::Conv3x3 ? 9u : 1u) * static_cast<std::size_t>(l.in_channels);
      const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < l.weight_count(); ++i) p.theta[off + i] = sd * rng.normal();
    }
    off += l.param_count();  // biases stay zero
  }
  return p;
}

std::vector<double> timestep_embedding(int t, int dim) {
  if (dim < 1) throw std::invalid_argument("timestep_embedding: dim must be >= 1");
  std::vector<double> emb(dim, 0.0);
  const int half = dim / 2;
  if (half == 0) {
    emb[0] = std::sin(static_cast<double>(t));
    return emb;
  }
  const double log_max_period = std::log(10000.0);
  for (int i = 0; i < half; ++i) {
    const double freq = half > 1 ? std::exp(-log_max_period * i / (half - 1)) : 1.0;
    emb[i] = std::sin(t * freq);
    emb[half + i] = std::cos(t * freq);
  }
  return emb;
}

namespace {

void build_input_map(const PredictorLayout& layout, const Tensor& x_t, const Tensor& y0, int t,
                     std::vector<double>& map) {
  const int c = layout.data_channels;
  const std::size_t plane = static_cast<std::size_t>(x_t.height()) * x_t.width();
  map.resize(static_cast<std::size_t>(layout.input_channels()) * plane);
  std::memcpy(map.data(), x_t.data(), c * plane * sizeof(double));
  std::memcpy(map.data() + c * plane, y0.data(), c * plane * sizeof(double));
  const auto emb = timestep_embedding(t, layout.t_embed_dim);
  double* dst = map.data() + 2 * static_cast<std::size_t>(c) * plane;
  for (int e = 0; e < layout.t_embed_dim; ++e, dst += plane) {
    std::fill(dst, dst + plane, emb[e]);
  }
}

void check_predict_inputs(const PredictorParams& params, const Tensor& x_t, const Tensor& y0,
                          int t, const Schedule& s) {
  if (x_t.ndim() != 3) {
    throw std::invalid_argument("predict: x_t must be (c,h,w), got " + x_t.shape_str());
  }
  require_same_shape(x_t, y0, "predict");
  if (x_t.channels() != params.layout.data_channels) {
    throw std::invalid_argument("predict: layout expects " +
                                std::to_string(params.layout.data_channels) + " channels, got " +
                                std::to_string(x_t.channels()));
  }
  if (params.theta.size() != params.layout.param_count()) {
    throw std::invalid_argument("predict: theta length " + std::to_string(params.theta.size()) +
                                " does not match layout parameter count " +
                                std::to_string(params.layout.param_count()));
  }
  if (t < 1 || t > s.steps()) {
    throw std::out_of_range("predict: t=" + std::to_string(t) + " outside [1," +
                            std::to_string(s.steps()) + "]");
  }
}

Tensor forward_pass(const PredictorParams& params, const Tensor& x_t, const Tensor& y0, int t,
                    Tape* tape) {
  const PredictorLayout& lay = params.layout;
  const int h = x_t.height();
  const int w = x_t.width();
  const int hw = h * w;

  std::vector<double> current;
  build_input_map(lay, x_t, y0, t, current);

  Tape local;
  Tape& tp = tape ? *tape : local;
  tp.h = h;
  tp.w = w;
  tp.inputs.resize(lay.layers.size());
  tp.preacts.resize(lay.layers.size());

  std::size_t off = 0;
  for (std::size_t li = 0; li < lay.layers.size(); ++li) {
    const auto& l = lay.layers[li];
    tp.inputs[li] = std::move(current);
    auto& pre = tp.preacts[li];
    pre.resize(static_cast<std::size_t>(l.out_channels) * hw);
    const double* wgt = params.theta.data() + off;
    const double* bias = wgt + l.weight_count();
    if (l.kind == LayerKind::Dense) {
      detail::dense_forward(tp.inputs[li].data(), wgt, bias, pre.data(), l.in_channels,
                            l.out_channels, hw);
    } else {
      detail::conv3_forward(tp.inputs[li].data(), wgt, bias, pre.data(), l.in_channels,
                            l.out_channels, h, w);
    }
    current.resize(pre.size());
    apply_activation(l.act, pre.data(), current.data(), pre.size());
    off += l.param_count();
  }

  Tensor out({lay.data_channels, h, w});
  std::memcpy(out.data(), current.data(), current.size() * sizeof(double));
  if (lay.identity_skip) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x_t[i];
  }
  return out;
}

// Accumulates d(theta) for one sample given d(prediction).
void backward_pass(const PredictorParams& params, const Tape& tape, const Tensor& d_pred,
                   std::vector<double>& d_theta) {
  const PredictorLayout& lay = params.layout;
  const int h = tape.h;
  const int w = tape.w;
  const int hw = h * w;

  // identity skip contributes nothing to theta
  std::vector<double> d_post(d_pred.data(), d_pred.data() + d_pred.size());

  std::vector<std::size_t> offsets(lay.layers.size());
  std::size_t off = 0;
  for (std::size_t li = 0; li < lay.layers.size(); ++li) {
    offsets[li] = off;
    off += lay.layers[li].param_count();
  }

  std::vector<double> d_pre;
  std::vector<double> d_in;
  for (std::size_t li = lay.layers.size(); li-- > 0;) {
    const auto& l = lay.layers[li];
    d_pre.resize(static_cast<std::size_t>(l.out_channels) * hw);
    activation_backward(l.act, tape.preacts[li].data(), d_post.data(), d_pre.data(),
                        d_pre.size());
    const double* wgt = params.theta.data() + offsets[li];
    double* d_wgt = d_theta.data() + offsets[li];
    double* d_bias = d_wgt + l.weight_count();
    const bool need_input_grad = li > 0;
    if (need_input_grad) d_in.resize(static_cast<std::size_t>(l.in_channels) * hw);
    if (l.kind == LayerKind::Dense) {
      detail::dense_backward(tape.inputs[li].data(), wgt, d_pre.data(),
                             need_input_grad ? d_in.data() : nullptr, d_wgt, d_bias,
                             l.in_channels, l.out_channels, hw);
    } else {
      detail::conv3_backward(tape.inputs[li].data(), wgt, d_pre.data(),
                             need_input_grad ? d_in.data() : nullptr, d_wgt, d_bias,
                             l.in_channels, l.out_channels, h, w);
    }
    if (need_input_grad) d_post = d_in;
  }
}

}  // namespace

Tensor predict(const PredictorParams& params, const Tensor& x_t, const Tensor& y0, int t,
               const Schedule& s) {
  check_predict_inputs(params, x_t, y0, t, s);
  return forward_pass(params, x_t, y0, t, nullptr);
}

int worker_count() {
  if (const char* env = std::getenv("RESSHIFT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::pair<double, Gradient> loss_and_gradient(const PredictorParams& params,
                                              const std::vector<TrainSample>& batch,
                                              const ObjectiveSpec& objective, const Schedule& s) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  const std::size_t n_params = params.layout.param_count();
  const int b = static_cast<int>(batch.size());

  std::vector<double> losses(b, 0.0);
  std::vector<std::vector<double>> grads(b);
  std::vector<int> failed(b, -1);

  // validate shapes up front so workers can only fail on non-finite values
  for (int k = 0; k < b; ++k) {
    check_predict_inputs(params, batch[k].x_t, batch[k].y0, batch[k].t, s);
    require_same_shape(batch[k].x_t, batch[k].x0, "loss_and_gradient");
  }

  auto run_one = [&](int k) {
    const TrainSample& smp = batch[k];
    Tape tape;
    const Tensor pred = forward_pass(params, smp.x_t, smp.y0, smp.t, &tape);
    const LossValue lv = total_loss(pred, smp.x0, smp.t, objective, s);
    if (!std::isfinite(lv.value)) {
      failed[k] = k;
      return;
    }
    losses[k] = lv.value;
    grads[k].assign(n_params, 0.0);
    backward_pass(params, tape, lv.d_pred, grads[k]);
  };

  const int workers = std::min<int>(worker_count(), b);
  if (workers <= 1) {
    for (int k = 0; k < b; ++k) run_one(k);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wk = 0; wk < workers; ++wk) {
      pool.emplace_back([&, wk] {
        for (int k = wk; k < b; k += workers) run_one(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (int k = 0; k < b; ++k) {
    if (failed[k] >= 0) {
      throw NonFiniteLossError(k, "loss_and_gradient: non-finite loss at batch index " +
                                      std::to_string(k));
    }
  }

  Gradient g;
  g.d_theta.assign(n_params, 0.0);
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (int k = 0; k < b; ++k) {
    loss += losses[k];
    const auto& gk = grads[k];
    for (std::size_t i = 0; i < n_params; ++i) g.d_theta[i] += gk[i];
  }
  loss *= inv_b;
  for (auto& v : g.d_theta) v *= inv_b;
  return {loss, std::move(g)};
}

AdamState AdamState::for_params(const PredictorParams& p) {
  AdamState st;
  st.m.assign(p.theta.size(), 0.0);
  st.v.assign(p.theta.size(), 0.0);
  return st;
}

bool adam_step(PredictorParams& params, const Gradient& grad, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (grad.d_theta.size() != params.theta.size() || state.m.size() != params.theta.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  if (lr < 0.0) throw std::invalid_argument("adam_step: lr must be >= 0");
  for (double v : grad.d_theta) {
    if (!std::isfinite(v)) return false;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.theta.size(); ++i) {
    const double g = grad.d_theta[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params.theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  return true;
}

double cosine_lr(long iter, long total_iters, double lr_max, double lr_min) {
  if (total_iters <= 1) return lr_max;
  const double frac = static_cast<double>(iter) / static_cast<double>(total_iters - 1);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

namespace {

constexpr char kMagic[8] = {'R', 'S', 'H', 'I', 'F', 'T', '0', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

nlohmann::json layout_to_json(const PredictorLayout& lay) {
  nlohmann::json j;
  j["data_channels"] = lay.data_channels;
  j["t_embed_dim"] = lay.t_embed_dim;
  j["identity_skip"] = lay.identity_skip;
  auto layers = nlohmann::json::array();
  for (const auto& l : lay.layers) {
    layers.push_back({{"kind", kind_name(l.kind)},
                      {"in", l.in_channels},
                      {"out", l.out_channels},
                      {"act", act_name(l.act)}});
  }
  j["layers"] = layers;
  return j;
}

PredictorLayout layout_from_json(const nlohmann::json& j) {
  PredictorLayout lay;
  lay.data_channels = j.at("data_channels").get<int>();
  lay.t_embed_dim = j.at("t_embed_dim").get<int>();
  lay.identity_skip = j.at("identity_skip").get<bool>();
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = kind_from_name(lj.at("kind").get<std::string>());
    l.in_channels = lj.at("in").get<int>();
    l.out_channels = lj.at("out").get<int>();
    l.act = act_from_name(lj.at("act").get<std::string>());
    lay.layers.push_back(l);
  }
  lay.validate();
  return lay;
}

}  // namespace

void save_checkpoint(const std::string& path, const PredictorParams& params,
                     const AdamState& opt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, 1);  // descriptor version
  const std::string desc = layout_to_json(params.layout).dump();
  write_u32(os, static_cast<std::uint32_t>(desc.size()));
  os.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  write_u64(os, params.theta.size());
  os.write(reinterpret_cast<const char*>(params.theta.data()),
           static_cast<std::streamsize>(params.theta.size() * sizeof(double)));
  write_u64(os, opt.m.size());
  os.write(reinterpret_cast<const char*>(opt.m.data()),
           static_cast<std::streamsize>(opt.m.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(opt.v.data()),
           static_cast<std::streamsize>(opt.v.size() * sizeof(double)));
  write_u64(os, static_cast<std::uint64_t>(opt.step));
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != 1) {
    throw std::runtime_error("load_checkpoint: unsupported descriptor version " +
                             std::to_string(version));
  }
  const std::uint32_t desc_len = read_u32(is);
  std::string desc(desc_len, '\0');
  is.read(desc.data(), desc_len);
  Checkpoint ck;
  ck.params.layout = layout_from_json(nlohmann::json::parse(desc));
  const std::uint64_t n_theta = read_u64(is);
  if (n_theta != ck.params.layout.param_count()) {
    throw std::runtime_error("load_checkpoint: theta count " + std::to_string(n_theta) +
                             " does not match layout parameter count " +
                             std::to_string(ck.params.layout.param_count()));
  }
  ck.params.theta.resize(n_theta);
  is.read(reinterpret_cast<char*>(ck.params.theta.data()),
          static_cast<std::streamsize>(n_theta * sizeof(double)));
  const std::uint64_t n_opt = read_u64(is);
  if (n_opt != n_theta) {
    throw std::runtime_error("load_checkpoint: moment count does not match theta count");
  }
  ck.opt.m.resize(n_opt);
  ck.opt.v.resize(n_opt);
  is.read(reinterpret_cast<char*>(ck.opt.m.data()),
          static_cast<std::streamsize>(n_opt * sizeof(double)));
  is.read(reinterpret_cast<char*>(ck.opt.v.data()),
          static_cast<std::streamsize>(n_opt * sizeof(double)));
  ck.opt.step = static_cast<long>(read_u64(is));
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return ck;
}

}  // namespace resshift
