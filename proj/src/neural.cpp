#include "treedit/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace treedit {

void zero_grads(const ParamList& params) {
  for (Param* p : params) p->zero_grad();
}

void init_uniform(Param& p, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Eigen::Index c = 0; c < p.value.cols(); ++c)
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = dist(rng);
}

void debug_check_finite([[maybe_unused]] const Mat& m, [[maybe_unused]] const char* what) {
#ifndef NDEBUG
  if (!m.allFinite()) throw ShapeError(std::string("non-finite values in ") + what);
#endif
}

LstmParams::LstmParams(const std::string& prefix, int in, int hidden)
    : d_in(in),
      d_h(hidden),
      w_i(prefix + ".w_i", hidden, in + hidden),
      w_f(prefix + ".w_f", hidden, in + hidden),
      w_o(prefix + ".w_o", hidden, in + hidden),
      w_c(prefix + ".w_c", hidden, in + hidden),
      b_i(prefix + ".b_i", hidden, 1),
      b_f(prefix + ".b_f", hidden, 1),
      b_o(prefix + ".b_o", hidden, 1),
      b_c(prefix + ".b_c", hidden, 1) {}

void LstmParams::init(std::mt19937_64& rng, double scale) {
  for (Param* p : params()) init_uniform(*p, rng, scale);
  b_f.value.setOnes();
}

ParamList LstmParams::params() { return {&w_i, &w_f, &w_o, &w_c, &b_i, &b_f, &b_o, &b_c}; }

namespace {
Vec sigmoid_vec(const Vec& a) { return a.unaryExpr([](double x) { return sigmoid(x); }); }
Vec tanh_vec(const Vec& a) { return a.array().tanh().matrix(); }
}  // namespace

LstmState lstm_step(const LstmParams& p, const LstmState& prev, const Vec& x, LstmCache* cache) {
  if (x.size() != p.d_in || prev.h.size() != p.d_h || prev.c.size() != p.d_h)
    throw ShapeError("lstm_step: expected input " + std::to_string(p.d_in) + " and state " + std::to_string(p.d_h) +
                     ", got " + std::to_string(x.size()) + "/" + std::to_string(prev.h.size()));
  Vec z(p.d_in + p.d_h);
  z << x, prev.h;
  Vec i = sigmoid_vec(p.w_i.value * z + p.b_i.value.col(0));
  Vec f = sigmoid_vec(p.w_f.value * z + p.b_f.value.col(0));
  Vec o = sigmoid_vec(p.w_o.value * z + p.b_o.value.col(0));
  Vec g = tanh_vec(p.w_c.value * z + p.b_c.value.col(0));
  LstmState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  Vec tanh_c = tanh_vec(next.c);
  next.h = o.cwiseProduct(tanh_c);
  debug_check_finite(next.h, "lstm_step");
  if (cache) {
    cache->z = std::move(z);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c_prev = prev.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmBackward lstm_backward(LstmParams& p, const LstmCache& k, const Vec& dh, const Vec& dc) {
  Vec dc_total = dc + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
  Vec d_o = dh.cwiseProduct(k.tanh_c);
  Vec d_i = dc_total.cwiseProduct(k.g);
  Vec d_g = dc_total.cwiseProduct(k.i);
  Vec d_f = dc_total.cwiseProduct(k.c_prev);

  Vec a_i = d_i.array() * k.i.array() * (1.0 - k.i.array());
  Vec a_f = d_f.array() * k.f.array() * (1.0 - k.f.array());
  Vec a_o = d_o.array() * k.o.array() * (1.0 - k.o.array());
  Vec a_g = d_g.array() * (1.0 - k.g.array().square());

  p.w_i.grad.noalias() += a_i * k.z.transpose();
  p.w_f.grad.noalias() += a_f * k.z.transpose();
  p.w_o.grad.noalias() += a_o * k.z.transpose();
  p.w_c.grad.noalias() += a_g * k.z.transpose();
  p.b_i.grad.col(0) += a_i;
  p.b_f.grad.col(0) += a_f;
  p.b_o.grad.col(0) += a_o;
  p.b_c.grad.col(0) += a_g;

  Vec dz = p.w_i.value.transpose() * a_i;
  dz.noalias() += p.w_f.value.transpose() * a_f;
  dz.noalias() += p.w_o.value.transpose() * a_o;
  dz.noalias() += p.w_c.value.transpose() * a_g;

  LstmBackward out;
  out.dx = dz.head(p.d_in);
  out.dh_prev = dz.tail(p.d_h);
  out.dc_prev = dc_total.cwiseProduct(k.f);
  return out;
}

Attention attend(const Vec& query, const Mat& keys) {
  if (keys.cols() == 0) throw std::invalid_argument("attend: no keys");
  if (keys.rows() != query.size()) throw ShapeError("attend: query/key dimension mismatch");
  Vec scores = keys.transpose() * query;
  Attention a;
  a.weights = (scores.array() - scores.maxCoeff()).exp().matrix();
  a.weights /= a.weights.sum();
  a.context = keys * a.weights;
  return a;
}

void attend_backward(const Vec& query, const Mat& keys, const Vec& weights, const Vec& dcontext, Vec& dquery,
                     Mat& dkeys) {
  Vec dw = keys.transpose() * dcontext;
  double avg = weights.dot(dw);
  Vec dscores = weights.array() * (dw.array() - avg);
  dquery.noalias() += keys * dscores;
  dkeys.noalias() += dcontext * weights.transpose();
  dkeys.noalias() += query * dscores.transpose();
}

Vec masked_softmax(const Vec& logits, std::span<const int> allowed) {
  if (allowed.empty()) throw std::invalid_argument("masked_softmax: empty mask");
  double mx = -std::numeric_limits<double>::infinity();
  for (int i : allowed) mx = std::max(mx, logits(i));
  Vec dist = Vec::Zero(logits.size());
  double sum = 0.0;
  for (int i : allowed) {
    double e = std::exp(logits(i) - mx);
    dist(i) = e;
    sum += e;
  }
  for (int i : allowed) dist(i) /= sum;
  return dist;
}

double cross_entropy(const Vec& dist, int target, std::span<const int> allowed) {
  if (std::find(allowed.begin(), allowed.end(), target) == allowed.end())
    throw std::logic_error("cross_entropy: target " + std::to_string(target) + " is masked out");
  return cross_entropy(dist, target);
}

double cross_entropy(const Vec& dist, int target) { return -std::log(std::max(dist(target), 1e-12)); }

Vec cross_entropy_grad(const Vec& dist, int target) {
  Vec g = dist;
  g(target) -= 1.0;
  return g;
}

double sgd_update(const ParamList& params, double lr, double clip) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  for (Param* p : params) {
    if (p->value.rows() != p->grad.rows() || p->value.cols() != p->grad.cols())
      throw ShapeError("sgd_update: gradient shape mismatch for " + p->name);
    p->value -= (lr * scale) * p->grad;
  }
  return norm;
}

std::vector<GradCheckResult> grad_check(const ParamList& params, const std::function<double()>& loss_and_grad,
                                        const std::function<double()>& loss, double epsilon) {
  loss_and_grad();
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  std::vector<GradCheckResult> out;
  for (size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    GradCheckResult r{p.name, 0.0, 0};
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      for (Eigen::Index row = 0; row < p.value.rows(); ++row) {
        const double saved = p.value(row, c);
        p.value(row, c) = saved + epsilon;
        const double up = loss();
        p.value(row, c) = saved - epsilon;
        const double down = loss();
        p.value(row, c) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = analytic[k](row, c);
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        r.max_rel_error = std::max(r.max_rel_error, rel);
        ++r.checked;
      }
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace treedit
