#include "mddra/graf.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mddra::graf {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

using Mat2 = std::array<cplx, 4>;

Mat2 matmul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 adjoint(const Mat2& a) {
  return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

const Mat2 kIdentity{cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)};

double leaky(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + ": non-finite activation; reduce the learning rate");
    }
  }
}

// Normalized output -> feasible config, the Jacobian handled in backprop_projection.
network::NetworkConfig unscale(std::span<const double> out, std::size_t n_bs,
                               const network::ResourceLimits& limits, int tau) {
  network::NetworkConfig cfg(n_bs, 0.0, 0.0, tau);
  const double unit = bandwidth_unit(limits, n_bs);
  for (std::size_t n = 0; n < n_bs; ++n) {
    cfg.bandwidth[n] = out[2 * n] * unit;
    cfg.power[n] = out[2 * n + 1] * limits.p_max;
  }
  network::project_feasible(cfg, limits);
  return cfg;
}

// dL/d(out) from dL/dB, dL/dP through the projection (b_min = 0 path).
std::vector<double> backprop_projection(std::span<const double> out, std::span<const double> gb,
                                        std::span<const double> gp,
                                        const network::ResourceLimits& limits) {
  const std::size_t n_bs = gb.size();
  std::vector<double> g(2 * n_bs, 0.0);
  const double to_u = bandwidth_unit(limits, n_bs) / limits.b_max;
  double sum_u = 0.0;
  for (std::size_t n = 0; n < n_bs; ++n) sum_u += std::max(out[2 * n] * to_u, limits.b_min / limits.b_max);
  if (sum_u > 1.0) {
    double dot = 0.0;
    for (std::size_t n = 0; n < n_bs; ++n) dot += gb[n] * out[2 * n] * to_u;
    for (std::size_t n = 0; n < n_bs; ++n) {
      g[2 * n] = to_u * limits.b_max * (gb[n] / sum_u - dot / (sum_u * sum_u));
    }
  } else {
    for (std::size_t n = 0; n < n_bs; ++n) g[2 * n] = to_u * limits.b_max * gb[n];
  }
  for (std::size_t n = 0; n < n_bs; ++n) {
    const double v = out[2 * n + 1];
    g[2 * n + 1] = (v > 0.0 && v < 1.0) ? limits.p_max * gp[n] : 0.0;
  }
  return g;
}

}  // namespace

namespace {
// Plans are reused per thread and length.
Dft& cached_dft(std::size_t n) {
  thread_local std::map<std::size_t, Dft> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Dft(n)).first;
  return it->second;
}
}  // namespace

Dft::Dft(std::size_t n) : n_(n) {
  if (n == 0) throw DomainError("Dft: length must be >= 1");
  std::lock_guard<std::mutex> lock(plan_mutex());
  buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * n));
  auto* in = reinterpret_cast<fftw_complex*>(buf_in_);
  auto* out = reinterpret_cast<fftw_complex*>(buf_out_);
  const int len = static_cast<int>(n);
  fwd_ = fftw_plan_dft_1d(len, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_1d(len, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Dft::~Dft() { release(); }

Dft::Dft(Dft&& other) noexcept
    : n_(other.n_), fwd_(other.fwd_), bwd_(other.bwd_), buf_in_(other.buf_in_), buf_out_(other.buf_out_) {
  other.fwd_ = other.bwd_ = nullptr;
  other.buf_in_ = other.buf_out_ = nullptr;
}

Dft& Dft::operator=(Dft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = other.n_;
    fwd_ = other.fwd_;
    bwd_ = other.bwd_;
    buf_in_ = other.buf_in_;
    buf_out_ = other.buf_out_;
    other.fwd_ = other.bwd_ = nullptr;
    other.buf_in_ = other.buf_out_ = nullptr;
  }
  return *this;
}

void Dft::release() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  if (buf_in_) fftw_free(buf_in_);
  if (buf_out_) fftw_free(buf_out_);
  fwd_ = bwd_ = nullptr;
  buf_in_ = buf_out_ = nullptr;
}

void Dft::forward(std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != n_ || out.size() != n_) throw ShapeError("Dft::forward: length mismatch");
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::copy(buf_out_, buf_out_ + n_, out.begin());
}

void Dft::inverse(std::span<const cplx> in, std::span<cplx> out) {
  if (in.size() != n_ || out.size() != n_) throw ShapeError("Dft::inverse: length mismatch");
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(bwd_));
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = buf_out_[i] * inv;
}

ConfigGraph build_graph(std::span<const network::NetworkConfig> history,
                        const network::Deployment& deployment, double adjacency_threshold,
                        const network::ResourceLimits& limits) {
  if (history.empty()) throw DomainError("build_graph: empty history");
  ConfigGraph g;
  g.n_bs = deployment.size();
  g.window = history.size();
  const std::size_t n = g.nodes();
  g.x.assign(2 * n, 0.0);
  const double unit = bandwidth_unit(limits, g.n_bs);
  for (std::size_t t = 0; t < g.window; ++t) {
    if (history[t].size() != g.n_bs) throw ShapeError("build_graph: history/deployment BS count mismatch");
    for (std::size_t b = 0; b < g.n_bs; ++b) {
      const std::size_t i = t * g.n_bs + b;
      g.x[2 * i] = history[t].bandwidth[b] / unit;
      g.x[2 * i + 1] = history[t].power[b] / limits.p_max;
    }
  }
  g.adj.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ti = i / g.n_bs;
    const std::size_t bi = i % g.n_bs;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t tj = j / g.n_bs;
      const std::size_t bj = j % g.n_bs;
      bool link = i == j;
      if (bi == bj && (ti + 1 == tj || tj + 1 == ti)) link = true;
      if (ti == tj && bi != bj &&
          distance(deployment.positions[bi], deployment.positions[bj]) <= adjacency_threshold) {
        link = true;
      }
      g.adj[i * n + j] = link ? 1 : 0;
    }
  }
  return g;
}

FgoStack FgoStack::initial(std::size_t n_layers) {
  if (n_layers < 1) throw ConfigError("FGO stack needs at least one layer");
  FgoStack s;
  s.layers.resize(n_layers);
  const double k = 1.0 / static_cast<double>(n_layers);
  s.w = {k, 0.0, 0.0, k};
  return s;
}

std::vector<double> FgoStack::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers) {
    for (const cplx& z : l.s) {
      p.push_back(z.real());
      p.push_back(z.imag());
    }
    for (const cplx& z : l.b) {
      p.push_back(z.real());
      p.push_back(z.imag());
    }
  }
  p.insert(p.end(), w.begin(), w.end());
  p.insert(p.end(), c.begin(), c.end());
  return p;
}

void FgoStack::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw ShapeError("FgoStack: parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (cplx& z : l.s) {
      z = cplx(p[k], p[k + 1]);
      k += 2;
    }
    for (cplx& z : l.b) {
      z = cplx(p[k], p[k + 1]);
      k += 2;
    }
  }
  for (double& x : w) x = p[k++];
  for (double& x : c) x = p[k++];
}

std::vector<double> fgo_forward_raw(const ConfigGraph& graph, const FgoStack& stack,
                                    FgoCache* cache) {
  const std::size_t n = graph.nodes();
  if (graph.x.size() != 2 * n) throw ShapeError("fgo_forward: feature array has wrong size");
  if (stack.layers.empty()) throw ConfigError("fgo_forward: empty stack");
  FgoCache local;
  FgoCache& c = cache ? *cache : local;
  c = FgoCache{};
  c.n = n;
  c.first_row = (graph.window - 1) * graph.n_bs;

  Dft& dft = cached_dft(n);
  std::vector<cplx> col(n), spec(n);
  c.xhat.assign(2 * n, cplx(0.0));
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < n; ++i) col[i] = cplx(graph.x[2 * i + f], 0.0);
    dft.forward(col, spec);
    for (std::size_t k = 0; k < n; ++k) c.xhat[2 * k + f] = spec[k];
  }

  std::vector<cplx> zsum(2 * n, cplx(0.0));
  Mat2 prefix = kIdentity;
  for (const auto& layer : stack.layers) {
    prefix = matmul(prefix, layer.s);
    c.prefix.push_back(prefix);
    std::vector<cplx> h(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx x0 = c.xhat[2 * k];
      const cplx x1 = c.xhat[2 * k + 1];
      h[2 * k] = x0 * prefix[0] + x1 * prefix[2] + layer.b[0];
      h[2 * k + 1] = x0 * prefix[1] + x1 * prefix[3] + layer.b[1];
    }
    for (std::size_t i = 0; i < 2 * n; ++i) {
      zsum[i] += cplx(leaky(h[i].real(), stack.leaky_slope), leaky(h[i].imag(), stack.leaky_slope));
    }
    c.h.push_back(std::move(h));
  }

  c.y.assign(2 * n, 0.0);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t k = 0; k < n; ++k) spec[k] = zsum[2 * k + f];
    dft.inverse(spec, col);
    for (std::size_t i = 0; i < n; ++i) c.y[2 * i + f] = col[i].real();
  }
  check_finite(c.y, "fgo_forward");

  c.pre.assign(2 * graph.n_bs, 0.0);
  c.out.assign(2 * graph.n_bs, 0.0);
  for (std::size_t b = 0; b < graph.n_bs; ++b) {
    const std::size_t row = c.first_row + b;
    const double y0 = c.y[2 * row];
    const double y1 = c.y[2 * row + 1];
    for (std::size_t f = 0; f < 2; ++f) {
      const double pre = y0 * stack.w[f] + y1 * stack.w[2 + f] + stack.c[f];
      c.pre[2 * b + f] = pre;
      c.out[2 * b + f] = std::max(pre, 0.0);
    }
  }
  return c.out;
}

std::vector<double> fgo_backward(const FgoStack& stack, const FgoCache& cache,
                                 std::span<const double> grad_out) {
  const std::size_t n = cache.n;
  const std::size_t n_bs = cache.out.size() / 2;
  if (grad_out.size() != 2 * n_bs) throw ShapeError("fgo_backward: gradient has wrong size");
  const std::size_t n_layers = stack.layers.size();
  std::vector<double> grad(stack.parameter_count(), 0.0);
  const std::size_t w_off = n_layers * 12;

  // Dense output map.
  std::vector<double> gy(2 * n, 0.0);
  for (std::size_t b = 0; b < n_bs; ++b) {
    const std::size_t row = cache.first_row + b;
    for (std::size_t f = 0; f < 2; ++f) {
      const double gp = cache.pre[2 * b + f] > 0.0 ? grad_out[2 * b + f] : 0.0;
      if (gp == 0.0) continue;
      grad[w_off + f] += cache.y[2 * row] * gp;
      grad[w_off + 2 + f] += cache.y[2 * row + 1] * gp;
      grad[w_off + 4 + f] += gp;
      gy[2 * row] += stack.w[f] * gp;
      gy[2 * row + 1] += stack.w[2 + f] * gp;
    }
  }

  // Real part of the inverse DFT: the adjoint is (1/n) times the forward DFT.
  Dft& dft = cached_dft(n);
  std::vector<cplx> col(n), spec(n);
  std::vector<cplx> gz(2 * n);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < n; ++i) col[i] = cplx(gy[2 * i + f], 0.0);
    dft.forward(col, spec);
    for (std::size_t k = 0; k < n; ++k) gz[2 * k + f] = spec[k] * inv;
  }

  std::vector<Mat2> gm(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& h = cache.h[l];
    Mat2 g{};
    cplx gb0(0.0), gb1(0.0);
    for (std::size_t k = 0; k < n; ++k) {
      cplx gh[2];
      for (std::size_t f = 0; f < 2; ++f) {
        const cplx z = gz[2 * k + f];
        const cplx hv = h[2 * k + f];
        gh[f] = cplx(z.real() * leaky_grad(hv.real(), stack.leaky_slope),
                     z.imag() * leaky_grad(hv.imag(), stack.leaky_slope));
      }
      gb0 += gh[0];
      gb1 += gh[1];
      const cplx x0 = std::conj(cache.xhat[2 * k]);
      const cplx x1 = std::conj(cache.xhat[2 * k + 1]);
      g[0] += x0 * gh[0];
      g[1] += x0 * gh[1];
      g[2] += x1 * gh[0];
      g[3] += x1 * gh[1];
    }
    gm[l] = g;
    const std::size_t off = l * 12 + 8;
    grad[off] = gb0.real();
    grad[off + 1] = gb0.imag();
    grad[off + 2] = gb1.real();
    grad[off + 3] = gb1.imag();
  }

  // M_l = S_0 ... S_l, so dS_j = sum_{l >= j} (S_0..S_{j-1})^H gM_l (S_{j+1}..S_l)^H.
  for (std::size_t j = 0; j < n_layers; ++j) {
    const Mat2 left = j == 0 ? kIdentity : adjoint(cache.prefix[j - 1]);
    Mat2 right = kIdentity;  // S_{j+1} ... S_l
    Mat2 acc{};
    for (std::size_t l = j; l < n_layers; ++l) {
      if (l > j) right = matmul(right, stack.layers[l].s);
      const Mat2 term = matmul(matmul(left, gm[l]), adjoint(right));
      for (std::size_t e = 0; e < 4; ++e) acc[e] += term[e];
    }
    for (std::size_t e = 0; e < 4; ++e) {
      grad[j * 12 + 2 * e] = acc[e].real();
      grad[j * 12 + 2 * e + 1] = acc[e].imag();
    }
  }
  return grad;
}

network::NetworkConfig fgo_forward(const ConfigGraph& graph, const FgoStack& stack,
                                   const network::ResourceLimits& limits, int tau) {
  const auto out = fgo_forward_raw(graph, stack);
  return unscale(out, graph.n_bs, limits, tau);
}

Field rbf_forward(const network::NetworkConfig& config, const network::ChannelGains& grid_gains,
                  const Grid& grid, const network::ResourceLimits& limits, int tau) {
  return network::capacity_lb_field(config, grid_gains, grid, limits, tau);
}

void TrainState::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw ShapeError("TrainState::step: size mismatch");
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    steps = 0;
  }
  ++steps;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void TrainState::reset() {
  steps = 0;
  m.clear();
  v.clear();
}

network::ChannelGains sample_gains(const scenario::TrafficSample& sample,
                                   const network::Deployment& deployment,
                                   const network::ChannelParams& params) {
  std::vector<Vec2> pts;
  pts.reserve(sample.count());
  for (const auto& e : sample.entries) pts.push_back(e.location);
  return network::ChannelGains(deployment, pts, params);
}

double sample_loss(const network::NetworkConfig& config, const scenario::TrafficSample& sample,
                   const network::ChannelGains& gains, const network::ResourceLimits& limits) {
  const auto c = network::capacity_lb_points(config, gains, limits);
  double loss = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) {
    const double e = c[m] - sample.entries[m].demand;
    loss += e * e;
  }
  return loss;
}

namespace {

double demand_scale(const scenario::TrafficSample& sample) {
  double mean = 0.0;
  for (const auto& e : sample.entries) mean += e.demand;
  mean /= static_cast<double>(std::max<std::size_t>(sample.count(), 1));
  return mean > 0.0 ? mean : 1e6;
}

// Normalized least-squares loss and its gradient in (B, P).
double scaled_loss(const network::NetworkConfig& cfg, const scenario::TrafficSample& sample,
                   const network::ChannelGains& gains, const network::ResourceLimits& limits,
                   double scale, std::vector<double>* gb, std::vector<double>* gp) {
  const std::size_t n_bs = cfg.size();
  const std::size_t m = gains.n_points();
  const auto c = network::capacity_lb_points(cfg, gains, limits);
  const double norm = 1.0 / (static_cast<double>(m) * scale * scale);
  std::vector<double> gc(m);
  double loss = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double e = c[j] - sample.entries[j].demand;
    loss += e * e * norm;
    gc[j] = 2.0 * e * norm;
  }
  if (gb && gp) {
    gb->assign(n_bs, 0.0);
    gp->assign(n_bs, 0.0);
    for (std::size_t n = 0; n < n_bs; ++n) {
      const double k = cfg.power[n] / limits.b_max;
      const double* g = gains.row(n);
      double sb = 0.0, sp = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double s = k * g[j];
        sb += gc[j] * kInvLn2 * std::log1p(s);
        sp += gc[j] * kInvLn2 * g[j] / (limits.b_max * (1.0 + s));
      }
      (*gb)[n] = sb;
      (*gp)[n] = sp * cfg.bandwidth[n];
    }
  }
  return loss;
}

}  // namespace

PretrainResult pretrain(FgoStack& stack, const ConfigGraph& graph,
                        const scenario::TrafficSample& sample,
                        const network::ChannelGains& gains,
                        const network::ResourceLimits& limits, int epochs, TrainState& state) {
  if (sample.count() < 1) throw DomainError("pretrain: the sample needs at least one user");
  if (gains.n_points() != sample.count()) throw ShapeError("pretrain: gains/sample size mismatch");
  if (gains.n_bs() != graph.n_bs) throw ShapeError("pretrain: gains/graph BS count mismatch");
  PretrainResult r;
  const double scale = demand_scale(sample);
  const double raw = static_cast<double>(sample.count()) * scale * scale;
  std::vector<double> params = stack.parameters();
  std::vector<double> best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> gb, gp;
  FgoCache cache;
  for (int e = 0; e <= epochs; ++e) {
    stack.set_parameters(params);
    const auto out = fgo_forward_raw(graph, stack, &cache);
    const auto cfg = unscale(out, graph.n_bs, limits, sample.timestamp);
    const bool last = e == epochs;
    const double loss = scaled_loss(cfg, sample, gains, limits, scale, last ? nullptr : &gb,
                                    last ? nullptr : &gp);
    if (!std::isfinite(loss)) {
      throw NumericError("pretrain: loss diverged at epoch " + std::to_string(e) +
                         "; use a smaller learning rate");
    }
    r.loss.push_back(loss * raw);
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
    if (last) break;
    const auto gout = backprop_projection(out, gb, gp, limits);
    const auto grad = fgo_backward(stack, cache, gout);
    state.step(params, grad);
  }
  stack.set_parameters(best);
  r.final_loss = best_loss * raw;

  constexpr std::size_t kWindow = 100;
  if (r.loss.size() >= 2 * kWindow) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + kWindow <= r.loss.size(); s += kWindow) {
      const double avg =
          std::accumulate(r.loss.begin() + static_cast<std::ptrdiff_t>(s),
                          r.loss.begin() + static_cast<std::ptrdiff_t>(s + kWindow), 0.0) /
          static_cast<double>(kWindow);
      if (avg > prev * (1.0 + 1e-9)) r.monotone = false;
      prev = avg;
    }
  }
  return r;
}

FinetuneResult finetune(const network::NetworkConfig& init, const Evaluator& evaluator, int epochs,
                        TrainState& state, const network::ResourceLimits& limits) {
  const std::size_t n_bs = init.size();
  network::NetworkConfig cfg = init;
  network::project_feasible(cfg, limits);
  FinetuneResult r;
  Ascent a = evaluator(cfg);
  r.config = cfg;
  r.value = a.value;
  r.initial_value = a.value;
  // Bandwidth is stepped in units of the even share B_max / N so both coordinates are O(1).
  const double share = limits.b_max / static_cast<double>(std::max<std::size_t>(n_bs, 1));
  const double du = share / limits.b_max;
  std::vector<double> theta(2 * n_bs), grad(2 * n_bs);
  for (std::size_t n = 0; n < n_bs; ++n) {
    theta[n] = cfg.bandwidth[n] / share;
    theta[n_bs + n] = cfg.power[n] / limits.p_max;
  }
  for (int e = 0; e < epochs; ++e) {
    bool zero = true;
    for (std::size_t n = 0; n < n_bs; ++n) {
      grad[n] = -a.grad_u[n] * du;
      grad[n_bs + n] = -a.grad_v[n];
      if (grad[n] != 0.0 || grad[n_bs + n] != 0.0) zero = false;
    }
    if (zero) break;
    state.step(theta, grad);
    for (std::size_t n = 0; n < n_bs; ++n) {
      cfg.bandwidth[n] = theta[n] * share;
      cfg.power[n] = theta[n_bs + n] * limits.p_max;
    }
    network::project_feasible(cfg, limits);
    for (std::size_t n = 0; n < n_bs; ++n) {
      theta[n] = cfg.bandwidth[n] / share;
      theta[n_bs + n] = cfg.power[n] / limits.p_max;
    }
    a = evaluator(cfg);
    if (!std::isfinite(a.value)) throw NumericError("finetune: objective became non-finite");
    if (a.value > r.value) {
      r.value = a.value;
      r.config = cfg;
      r.best_epoch = e;
    }
  }
  return r;
}

network::NetworkConfig fit_config(const scenario::TrafficSample& sample,
                                  const network::ChannelGains& gains,
                                  const network::ResourceLimits& limits,
                                  network::NetworkConfig init, int epochs, double lr) {
  if (sample.count() == 0) return init;
  const double scale = demand_scale(sample);
  TrainState st;
  st.lr = lr;
  const Evaluator eval = [&](const network::NetworkConfig& cfg) {
    Ascent a;
    std::vector<double> gb, gp;
    a.value = -scaled_loss(cfg, sample, gains, limits, scale, &gb, &gp);
    a.grad_u.resize(cfg.size());
    a.grad_v.resize(cfg.size());
    for (std::size_t n = 0; n < cfg.size(); ++n) {
      a.grad_u[n] = -gb[n] * limits.b_max;
      a.grad_v[n] = -gp[n] * limits.p_max;
    }
    return a;
  };
  return finetune(init, eval, epochs, st, limits).config;
}

scenario::TrafficField predict_traffic(const FgoStack& stack, const ConfigGraph& graph,
                                       const network::ChannelGains& grid_gains, const Grid& grid,
                                       const network::ResourceLimits& limits, int tau) {
  const auto cfg = fgo_forward(graph, stack, limits, tau);
  return rbf_forward(cfg, grid_gains, grid, limits, tau);
}

double anrmse(const Field& predicted, const Field& truth) {
  require_same_grid(predicted, truth, "anrmse");
  double se = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    se += e * e;
    mean += truth[i];
  }
  const double m = static_cast<double>(truth.size());
  mean /= m;
  if (!(mean != 0.0)) throw NumericError("anrmse: truth has zero spatial mean");
  return std::sqrt(se / m) / std::abs(mean);
}

double anrmse(std::span<const Field> predicted, std::span<const Field> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw ShapeError("anrmse: series lengths differ or are empty");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) s += anrmse(predicted[t], truth[t]);
  return s / static_cast<double>(truth.size());
}

void save_checkpoint(std::ostream& os, const FgoStack& stack, const std::string& config_hash) {
  os << "mddra-fgo 1\n";
  os << "hash " << (config_hash.empty() ? "-" : config_hash) << "\n";
  os << "layers " << stack.layers.size() << "\n";
  char buf[32];
  auto put = [&](double x) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    os.write(buf, res.ptr - buf);
    os << "\n";
  };
  os << "slope ";
  put(stack.leaky_slope);
  for (double p : stack.parameters()) put(p);
}

FgoStack load_checkpoint(std::istream& is, std::string* config_hash) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "mddra-fgo" || version != 1) {
    throw ConfigError("checkpoint: unrecognized header");
  }
  std::string key, hash;
  std::size_t n_layers = 0;
  double slope = 0.0;
  if (!(is >> key >> hash) || key != "hash") throw ConfigError("checkpoint: missing hash line");
  if (!(is >> key >> n_layers) || key != "layers" || n_layers == 0) {
    throw ConfigError("checkpoint: missing layer count");
  }
  if (!(is >> key >> slope) || key != "slope") throw ConfigError("checkpoint: missing slope");
  FgoStack s = FgoStack::initial(n_layers);
  s.leaky_slope = slope;
  std::vector<double> p(s.parameter_count());
  for (double& x : p) {
    if (!(is >> x)) throw ConfigError("checkpoint: truncated parameter list");
  }
  s.set_parameters(p);
  if (config_hash) *config_hash = hash == "-" ? std::string() : hash;
  return s;
}

}  // namespace mddra::graf
