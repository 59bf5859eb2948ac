#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treedit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ModelDims {
  int embed = 32;
  int hidden = 64;
  double init_scale = 0.08;
};

// A named trainable array and its accumulated gradient.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);
void init_uniform(Param& p, std::mt19937_64& rng, double scale);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Gate weights act on the concatenation [x; h_prev].
struct LstmParams {
  int d_in = 0;
  int d_h = 0;
  Param w_i, w_f, w_o, w_c;  // d_h x (d_in + d_h)
  Param b_i, b_f, b_o, b_c;  // d_h x 1

  LstmParams() = default;
  LstmParams(const std::string& prefix, int d_in, int d_h);

  // uniform(-scale, scale) everywhere except the forget bias, set to 1.
  void init(std::mt19937_64& rng, double scale);
  ParamList params();
};

struct LstmState {
  Vec h;
  Vec c;

  static LstmState zero(int d_h) { return {Vec::Zero(d_h), Vec::Zero(d_h)}; }
};

struct LstmCache {
  Vec z;  // [x; h_prev]
  Vec i, f, o, g;
  Vec c_prev, tanh_c;
};

LstmState lstm_step(const LstmParams& p, const LstmState& prev, const Vec& x, LstmCache* cache = nullptr);

struct LstmBackward {
  Vec dx;
  Vec dh_prev;
  Vec dc_prev;
};

// Accumulates into p's gradients given dL/dh and dL/dc of the step output.
LstmBackward lstm_backward(LstmParams& p, const LstmCache& cache, const Vec& dh, const Vec& dc);

struct Attention {
  Vec context;
  Vec weights;
};

// Dot-product attention; `keys` holds one key per column.
Attention attend(const Vec& query, const Mat& keys);
// Adds dL/dquery into dquery and dL/dkeys into dkeys.
void attend_backward(const Vec& query, const Mat& keys, const Vec& weights, const Vec& dcontext, Vec& dquery,
                     Mat& dkeys);

// Softmax restricted to `allowed` (sorted or not); every other entry is
// exactly zero. Throws std::invalid_argument on an empty mask.
Vec masked_softmax(const Vec& logits, std::span<const int> allowed);

// -log(dist[target]) with dist[target] clamped at 1e-12. Throws
// std::logic_error if `target` is outside `allowed`.
double cross_entropy(const Vec& dist, int target, std::span<const int> allowed);
double cross_entropy(const Vec& dist, int target);
// Gradient of cross_entropy(masked_softmax(logits)) w.r.t. logits.
Vec cross_entropy_grad(const Vec& dist, int target);

// p <- p - lr * g, with global gradient-norm clipping when clip > 0.
// Returns the pre-clipping gradient norm.
double sgd_update(const ParamList& params, double lr, double clip = 5.0);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  size_t checked = 0;
};

// Central differences on every coordinate of every parameter, compared with
// the analytic gradient produced by `loss_and_grad` (which must zero and
// then fill the gradients). `loss` evaluates the forward pass only.
// Relative error is |a - n| / max(1e-8, |a| + |n|).
std::vector<GradCheckResult> grad_check(const ParamList& params, const std::function<double()>& loss_and_grad,
                                        const std::function<double()>& loss, double epsilon = 1e-5);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Aborts with ShapeError naming `what` when any entry is NaN/Inf. No-op in
// release builds.
void debug_check_finite(const Mat& m, const char* what);

}  // namespace treedit
