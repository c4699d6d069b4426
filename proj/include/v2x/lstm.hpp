#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace v2x {

using Vec = Eigen::VectorXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer widths of the interval regressor: input -> dense(tanh)... -> LSTM -> linear(1).
struct NetShape {
  int inputs = 1;
  std::vector<int> dense{40, 50, 60};
  int lstm = 60;

  bool operator==(const NetShape&) const = default;
};

/// Offsets of every weight block inside one flat, row-major parameter vector.
/// The same layout indexes parameters and gradients.
class ParamLayout {
 public:
  struct Block {
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  };

  ParamLayout() = default;
  explicit ParamLayout(const NetShape& shape);

  const NetShape& shape() const { return shape_; }
  std::size_t size() const { return total_; }
  std::size_t dense_count() const { return dense_w_.size(); }
  const Block& dense_w(std::size_t l) const { return dense_w_[l]; }
  const Block& dense_b(std::size_t l) const { return dense_b_[l]; }
  const Block& lstm_wx() const { return lstm_wx_; }
  const Block& lstm_wh() const { return lstm_wh_; }
  const Block& lstm_b() const { return lstm_b_; }
  const Block& head_w() const { return head_w_; }
  const Block& head_b() const { return head_b_; }
  /// All blocks in serialization order.
  std::vector<Block> blocks() const;

 private:
  NetShape shape_;
  std::vector<Block> dense_w_, dense_b_;
  Block lstm_wx_, lstm_wh_, lstm_b_, head_w_, head_b_;
  std::size_t total_ = 0;
};

/// Recurrent state carried between packets of one (neighbor, packet type) pair.
struct LstmState {
  Vec h;
  Vec c;
};

/// Intermediate values of one forward step, kept for backpropagation.
struct StepCache {
  std::vector<Vec> activations;  // [0] = input, then each dense output
  Vec h_prev, c_prev;
  Vec i, f, g, o;
  Vec c, tanh_c, h;
  double y = 0.0;
};

class RecurrentNet {
 public:
  RecurrentNet() = default;
  explicit RecurrentNet(const NetShape& shape);

  /// Xavier-uniform weights, zero biases except forget-gate bias = 1.
  template <class Eng>
  void init_random(Eng& eng);

  const NetShape& shape() const { return layout_.shape(); }
  const ParamLayout& layout() const { return layout_; }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }
  std::size_t parameter_count() const { return layout_.size(); }

  LstmState initial_state() const;

  /// One step; updates `state` and returns the (scaled) scalar output.
  /// Throws std::runtime_error on a non-finite activation.
  double step(const Vec& x, LstmState& state) const;
  double step(const Vec& x, LstmState& state, StepCache& cache) const;

  /// Sum-of-squares loss (1/T) * sum_t (y_t - target_t)^2 over a sequence
  /// starting from `state` (which is advanced). Fills `grad` (same layout as
  /// params) when non-null; the incoming state is treated as a constant.
  double sequence_loss(std::span<const Vec> xs, std::span<const double> targets, LstmState& state,
                       Vec* grad) const;

 private:
  Eigen::Map<const RowMajorMat> mat(const ParamLayout::Block& b) const;
  Eigen::Map<const Vec> vec(const ParamLayout::Block& b) const;

  ParamLayout layout_;
  Vec params_;
};

/// Adam optimizer over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void update(Vec& params, const Vec& grad);
  std::uint64_t steps() const { return t_; }

 private:
  Vec m_, v_;
  double lr_, b1_, b2_, eps_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------

template <class Eng>
void RecurrentNet::init_random(Eng& eng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto fill = [&](const ParamLayout::Block& b, double scale) {
    for (std::size_t k = 0; k < b.size(); ++k) params_[static_cast<Eigen::Index>(b.offset + k)] = scale * u(eng);
  };
  params_.setZero();
  for (std::size_t l = 0; l < layout_.dense_count(); ++l) {
    const auto& w = layout_.dense_w(l);
    fill(w, std::sqrt(6.0 / (w.rows + w.cols)));
  }
  const auto& wx = layout_.lstm_wx();
  const auto& wh = layout_.lstm_wh();
  const int hsz = layout_.shape().lstm;
  fill(wx, std::sqrt(6.0 / (hsz + wx.cols)));
  fill(wh, std::sqrt(6.0 / (hsz + wh.cols)));
  const auto& b = layout_.lstm_b();
  for (int k = hsz; k < 2 * hsz; ++k) params_[static_cast<Eigen::Index>(b.offset + static_cast<std::size_t>(k))] = 1.0;
  fill(layout_.head_w(), std::sqrt(6.0 / (1 + hsz)));
}

}  // namespace v2x
