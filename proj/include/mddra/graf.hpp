#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mddra/network.hpp"
#include "mddra/scenario.hpp"

namespace mddra::graf {

using cplx = std::complex<double>;

/// Length-n complex DFT backed by FFTW. Not thread-safe per instance; plan
/// creation is serialized internally.
class Dft {
 public:
  explicit Dft(std::size_t n);
  ~Dft();
  Dft(const Dft&) = delete;
  Dft& operator=(const Dft&) = delete;
  Dft(Dft&& other) noexcept;
  Dft& operator=(Dft&& other) noexcept;

  [[nodiscard]] std::size_t size() const { return n_; }
  /// X_k = sum_i x_i exp(-2 pi i ik / n).
  void forward(std::span<const cplx> in, std::span<cplx> out);
  /// x_i = (1/n) sum_k X_k exp(+2 pi i ik / n).
  void inverse(std::span<const cplx> in, std::span<cplx> out);

 private:
  void release();
  std::size_t n_ = 0;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  cplx* buf_in_ = nullptr;
  cplx* buf_out_ = nullptr;
};

/// Space-time graph over the configuration history; node i = t * n_bs + n
/// with t = 0 the oldest slot.
struct ConfigGraph {
  std::size_t n_bs = 0;
  std::size_t window = 0;
  std::vector<double> x;          // nodes x 2, row-major, (B / bandwidth_unit, P / P_max)
  std::vector<std::uint8_t> adj;  // nodes x nodes

  [[nodiscard]] std::size_t nodes() const { return n_bs * window; }
  [[nodiscard]] bool adjacent(std::size_t i, std::size_t j) const { return adj[i * nodes() + j] != 0; }
};

/// Bandwidth feature scale: the even per-BS share B_max / n_bs.
inline double bandwidth_unit(const network::ResourceLimits& limits, std::size_t n_bs) {
  return limits.b_max / static_cast<double>(n_bs == 0 ? 1 : n_bs);
}

ConfigGraph build_graph(std::span<const network::NetworkConfig> history,
                        const network::Deployment& deployment, double adjacency_threshold,
                        const network::ResourceLimits& limits);

struct FgoLayer {
  std::array<cplx, 4> s{cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0)};  // 2x2 row-major
  std::array<cplx, 2> b{};
};

/// FGO layers followed by a dense 2x2 output map shared by all BSs.
struct FgoStack {
  std::vector<FgoLayer> layers;
  std::array<double, 4> w{1.0, 0.0, 0.0, 1.0};  // 2x2 row-major, out_f = sum_g y_g w[g][f] + c_f
  std::array<double, 2> c{};
  double leaky_slope = 0.01;  // 1 makes the activation the identity

  /// Identity spectral weights, zero biases and a dense map averaging the layer sum.
  static FgoStack initial(std::size_t n_layers = 3);

  [[nodiscard]] std::size_t parameter_count() const { return layers.size() * 12 + 6; }
  [[nodiscard]] std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);
};

/// Intermediate values kept for backpropagation.
struct FgoCache {
  std::size_t n = 0;
  std::vector<cplx> xhat;               // n x 2
  std::vector<std::vector<cplx>> h;     // per layer, n x 2, pre-activation
  std::vector<std::array<cplx, 4>> prefix;  // S_0 ... S_l
  std::vector<double> y;                // n x 2
  std::vector<double> pre;              // n_bs x 2, before the output ReLU
  std::vector<double> out;              // n_bs x 2, normalized (B, P)
  std::size_t first_row = 0;            // node index of the last-slot slice
};

/// Normalized last-slot output (n_bs x 2) before unscaling and projection.
std::vector<double> fgo_forward_raw(const ConfigGraph& graph, const FgoStack& stack,
                                    FgoCache* cache = nullptr);
/// Gradient of a loss with respect to the stack parameters given dL/d(out).
std::vector<double> fgo_backward(const FgoStack& stack, const FgoCache& cache,
                                 std::span<const double> grad_out);

/// Unscaled, feasibility-projected predicted config for the slot after the window.
network::NetworkConfig fgo_forward(const ConfigGraph& graph, const FgoStack& stack,
                                   const network::ResourceLimits& limits, int tau = 0);

/// Capacity lower bound on the grid (the RBF head).
Field rbf_forward(const network::NetworkConfig& config, const network::ChannelGains& grid_gains,
                  const Grid& grid, const network::ResourceLimits& limits, int tau = 0);

/// Adam state over a flat parameter vector.
struct TrainState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t steps = 0;
  std::vector<double> m, v;

  /// Gradient-descent step (pass -grad to ascend).
  void step(std::span<double> params, std::span<const double> grad);
  void reset();
};

struct PretrainResult {
  std::vector<double> loss;  // raw sum of squared errors per epoch, (bits/s)^2
  double final_loss = 0.0;
  bool monotone = true;      // 100-epoch moving average never increased
};

/// Fits the stack so the capacity of its output config matches the sampled
/// demands: minimizes sum_m (C(L_m) - D_m)^2.
PretrainResult pretrain(FgoStack& stack, const ConfigGraph& graph,
                        const scenario::TrafficSample& sample,
                        const network::ChannelGains& sample_gains,
                        const network::ResourceLimits& limits, int epochs, TrainState& state);

/// Sum of squared capacity errors of a config at the sample points.
double sample_loss(const network::NetworkConfig& config, const scenario::TrafficSample& sample,
                   const network::ChannelGains& sample_gains,
                   const network::ResourceLimits& limits);

/// Gains at the sample locations.
network::ChannelGains sample_gains(const scenario::TrafficSample& sample,
                                   const network::Deployment& deployment,
                                   const network::ChannelParams& params);

/// Least-squares fit of a config directly to a sample (no graph).
network::NetworkConfig fit_config(const scenario::TrafficSample& sample,
                                  const network::ChannelGains& sample_gains,
                                  const network::ResourceLimits& limits,
                                  network::NetworkConfig init, int epochs, double lr = 1e-2);

/// Value and gradient (in u = B / B_max, v = P / P_max) of an objective to maximize.
struct Ascent {
  double value = 0.0;
  std::vector<double> grad_u, grad_v;
};
using Evaluator = std::function<Ascent(const network::NetworkConfig&)>;

struct FinetuneResult {
  network::NetworkConfig config;
  double value = 0.0;
  double initial_value = 0.0;
  int best_epoch = -1;  // -1: the input was never improved on
};

/// Projected Adam ascent on (u, v); returns the best iterate seen.
FinetuneResult finetune(const network::NetworkConfig& init, const Evaluator& evaluator, int epochs,
                        TrainState& state, const network::ResourceLimits& limits);

/// Traffic estimate: capacity field of the predicted config.
scenario::TrafficField predict_traffic(const FgoStack& stack, const ConfigGraph& graph,
                                       const network::ChannelGains& grid_gains, const Grid& grid,
                                       const network::ResourceLimits& limits, int tau = 0);

/// RMSE over cells divided by the truth's spatial mean.
double anrmse(const Field& predicted, const Field& truth);
/// Mean of per-slot values.
double anrmse(std::span<const Field> predicted, std::span<const Field> truth);

/// Text checkpoint: header line, hash line, then one parameter per line.
void save_checkpoint(std::ostream& os, const FgoStack& stack, const std::string& config_hash);
FgoStack load_checkpoint(std::istream& is, std::string* config_hash = nullptr);

}  // namespace mddra::graf
