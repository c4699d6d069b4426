#include "v2x/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace v2x {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

ParamLayout::ParamLayout(const NetShape& shape) : shape_(shape) {
  if (shape.inputs < 1 || shape.lstm < 1) throw std::invalid_argument("NetShape: widths must be >= 1");
  std::size_t off = 0;
  auto take = [&](int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("NetShape: widths must be >= 1");
    Block b{off, rows, cols};
    off += b.size();
    return b;
  };
  int in = shape.inputs;
  for (int w : shape.dense) {
    dense_w_.push_back(take(w, in));
    dense_b_.push_back(take(w, 1));
    in = w;
  }
  const int h = shape.lstm;
  lstm_wx_ = take(4 * h, in);
  lstm_wh_ = take(4 * h, h);
  lstm_b_ = take(4 * h, 1);
  head_w_ = take(1, h);
  head_b_ = take(1, 1);
  total_ = off;
}

std::vector<ParamLayout::Block> ParamLayout::blocks() const {
  std::vector<Block> out;
  for (std::size_t l = 0; l < dense_w_.size(); ++l) {
    out.push_back(dense_w_[l]);
    out.push_back(dense_b_[l]);
  }
  out.insert(out.end(), {lstm_wx_, lstm_wh_, lstm_b_, head_w_, head_b_});
  return out;
}

RecurrentNet::RecurrentNet(const NetShape& shape) : layout_(shape), params_(Vec::Zero(static_cast<Eigen::Index>(layout_.size()))) {}

Eigen::Map<const RowMajorMat> RecurrentNet::mat(const ParamLayout::Block& b) const {
  return {params_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Vec> RecurrentNet::vec(const ParamLayout::Block& b) const {
  return {params_.data() + b.offset, static_cast<Eigen::Index>(b.size())};
}

LstmState RecurrentNet::initial_state() const {
  const int h = layout_.shape().lstm;
  return LstmState{Vec::Zero(h), Vec::Zero(h)};
}

double RecurrentNet::step(const Vec& x, LstmState& state) const {
  StepCache cache;
  return step(x, state, cache);
}

double RecurrentNet::step(const Vec& x, LstmState& s, StepCache& cache) const {
  if (x.size() != layout_.shape().inputs) throw std::invalid_argument("RecurrentNet::step: input width mismatch");
  cache.activations.resize(layout_.dense_count() + 1);
  cache.activations[0] = x;
  for (std::size_t l = 0; l < layout_.dense_count(); ++l) {
    cache.activations[l + 1] =
        (mat(layout_.dense_w(l)) * cache.activations[l] + vec(layout_.dense_b(l))).array().tanh().matrix();
  }
  const Vec& u = cache.activations.back();
  const Eigen::Index h = layout_.shape().lstm;
  const Vec z = mat(layout_.lstm_wx()) * u + mat(layout_.lstm_wh()) * s.h + vec(layout_.lstm_b());

  cache.h_prev = s.h;
  cache.c_prev = s.c;
  cache.i = z.segment(0, h).unaryExpr([](double v) { return sigmoid(v); });
  cache.f = z.segment(h, h).unaryExpr([](double v) { return sigmoid(v); });
  cache.g = z.segment(2 * h, h).array().tanh().matrix();
  cache.o = z.segment(3 * h, h).unaryExpr([](double v) { return sigmoid(v); });
  cache.c = cache.f.cwiseProduct(s.c) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = cache.c.array().tanh().matrix();
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
  cache.y = mat(layout_.head_w()).row(0).dot(cache.h) + params_[static_cast<Eigen::Index>(layout_.head_b().offset)];

  if (!std::isfinite(cache.y) || !cache.c.allFinite())
    throw std::runtime_error("RecurrentNet: non-finite activation (corrupt weights?)");
  s.h = cache.h;
  s.c = cache.c;
  return cache.y;
}

double RecurrentNet::sequence_loss(std::span<const Vec> xs, std::span<const double> targets, LstmState& state,
                                   Vec* grad) const {
  if (xs.size() != targets.size()) throw std::invalid_argument("sequence_loss: inputs/targets length mismatch");
  const std::size_t T = xs.size();
  if (T == 0) return 0.0;
  std::vector<StepCache> caches(T);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double y = step(xs[t], state, caches[t]);
    const double e = y - targets[t];
    loss += e * e;
  }
  const double invT = 1.0 / static_cast<double>(T);
  loss *= invT;
  if (grad == nullptr) return loss;

  grad->setZero(static_cast<Eigen::Index>(layout_.size()));
  auto gmat = [&](const ParamLayout::Block& b) {
    return Eigen::Map<RowMajorMat>(grad->data() + b.offset, b.rows, b.cols);
  };
  auto gvec = [&](const ParamLayout::Block& b) {
    return Eigen::Map<Vec>(grad->data() + b.offset, static_cast<Eigen::Index>(b.size()));
  };

  const Eigen::Index H = layout_.shape().lstm;
  const auto Wx = mat(layout_.lstm_wx());
  const auto Wh = mat(layout_.lstm_wh());
  const auto w_head = mat(layout_.head_w()).row(0).transpose();
  auto gWx = gmat(layout_.lstm_wx());
  auto gWh = gmat(layout_.lstm_wh());
  auto gB = gvec(layout_.lstm_b());
  auto gHead = gmat(layout_.head_w());
  double& gHeadB = (*grad)[static_cast<Eigen::Index>(layout_.head_b().offset)];

  Vec dh_next = Vec::Zero(H);
  Vec dc_next = Vec::Zero(H);
  Vec dz(4 * H);
  for (std::size_t tt = T; tt-- > 0;) {
    const StepCache& c = caches[tt];
    const double dy = 2.0 * (c.y - targets[tt]) * invT;
    gHead.row(0) += dy * c.h.transpose();
    gHeadB += dy;

    const Vec dh = dy * w_head + dh_next;
    const Vec d_o = dh.cwiseProduct(c.tanh_c);
    const Vec dc = dh.cwiseProduct(c.o).cwiseProduct((1.0 - c.tanh_c.array().square()).matrix()) + dc_next;
    const Vec d_i = dc.cwiseProduct(c.g);
    const Vec d_g = dc.cwiseProduct(c.i);
    const Vec d_f = dc.cwiseProduct(c.c_prev);

    dz.segment(0, H) = d_i.cwiseProduct((c.i.array() * (1.0 - c.i.array())).matrix());
    dz.segment(H, H) = d_f.cwiseProduct((c.f.array() * (1.0 - c.f.array())).matrix());
    dz.segment(2 * H, H) = d_g.cwiseProduct((1.0 - c.g.array().square()).matrix());
    dz.segment(3 * H, H) = d_o.cwiseProduct((c.o.array() * (1.0 - c.o.array())).matrix());

    const Vec& u = c.activations.back();
    gWx.noalias() += dz * u.transpose();
    gWh.noalias() += dz * c.h_prev.transpose();
    gB += dz;
    dh_next.noalias() = Wh.transpose() * dz;
    dc_next = dc.cwiseProduct(c.f);

    Vec du = Wx.transpose() * dz;
    for (std::size_t l = layout_.dense_count(); l-- > 0;) {
      const Vec& a = c.activations[l + 1];
      const Vec dpre = du.cwiseProduct((1.0 - a.array().square()).matrix());
      gmat(layout_.dense_w(l)).noalias() += dpre * c.activations[l].transpose();
      gvec(layout_.dense_b(l)) += dpre;
      if (l > 0) du = mat(layout_.dense_w(l)).transpose() * dpre;
    }
  }
  return loss;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : m_(Vec::Zero(static_cast<Eigen::Index>(n))),
      v_(Vec::Zero(static_cast<Eigen::Index>(n))),
      lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::update(Vec& params, const Vec& grad) {
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace v2x
