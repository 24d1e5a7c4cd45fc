// Dense network forward/backward and Adam.

#include "fdgan/nn.hpp"

#include <cmath>
#include <sstream>

namespace fdgan {

namespace {

// C += A^T * B  (A: n x r, B: n x c, C: r x c) -- the dW = a^T * delta case.
void accumulate_at_b(const Matrix& A, const Matrix& B, Matrix& C) {
  for (int k = 0; k < A.rows; ++k) {
    const double* arow = A.row(k);
    const double* brow = B.row(k);
    for (int i = 0; i < A.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = C.row(i);
      for (int j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

double hidden_act(Hidden h, double leak, double z) {
  if (h == Hidden::Tanh) return std::tanh(z);
  return z > 0.0 ? z : leak * z;
}

double hidden_grad(Hidden h, double leak, double z) {
  if (h == Hidden::Tanh) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : leak;
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
//  Mlp
// ---------------------------------------------------------------------------

Mlp Mlp::init(const MlpConfig& cfg, RngStream& rng) {
  if (cfg.sizes.size() < 2)
    throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : cfg.sizes)
    if (s <= 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
  Mlp net;
  net.cfg_ = cfg;
  for (std::size_t l = 0; l + 1 < cfg.sizes.size(); ++l) {
    Matrix w(cfg.sizes[l], cfg.sizes[l + 1]);
    for (double& x : w.a) x = rng.normal(0.0, cfg.init_std);
    net.weights_.push_back(std::move(w));
    net.biases_.emplace_back(cfg.sizes[l + 1], 0.0);
  }
  return net;
}

Matrix Mlp::forward(const Matrix& batch, Cache* cache) const {
  if (batch.cols != input_size())
    throw std::invalid_argument("Mlp::forward: batch width != input size");
  if (cache) {
    cache->input = batch;
    cache->pre.clear();
    cache->post.clear();
  }
  Matrix act = batch;
  const int L = n_layers();
  for (int l = 0; l < L; ++l) {
    const Matrix& w = weights_[l];
    const std::vector<double>& b = biases_[l];
    Matrix z(act.rows, w.cols);
    for (int i = 0; i < act.rows; ++i) {
      double* zrow = z.row(i);
      for (int j = 0; j < w.cols; ++j) zrow[j] = b[j];
      const double* arow = act.row(i);
      for (int k = 0; k < w.rows; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* wrow = w.row(k);
        for (int j = 0; j < w.cols; ++j) zrow[j] += aik * wrow[j];
      }
    }
    if (cache) cache->pre.push_back(z);
    if (l + 1 < L) {
      Matrix h(z.rows, z.cols);
      for (std::size_t i = 0; i < z.a.size(); ++i)
        h.a[i] = hidden_act(cfg_.hidden, cfg_.leak, z.a[i]);
      if (cache) cache->post.push_back(h);
      act = std::move(h);
    } else {
      if (cfg_.output == Output::Sigmoid)
        for (double& x : z.a) x = sigmoid_scalar(x);
      act = std::move(z);
    }
  }
  return act;
}

ParamGrads Mlp::backward(const Cache& cache, const Matrix& output_grad,
                         Matrix* input_grad) const {
  const int L = n_layers();
  if (static_cast<int>(cache.pre.size()) != L)
    throw std::invalid_argument("Mlp::backward: cache does not match network");
  if (output_grad.rows != cache.pre.back().rows ||
      output_grad.cols != output_size())
    throw std::invalid_argument("Mlp::backward: output_grad shape mismatch");

  ParamGrads grads = zero_grads();
  Matrix delta = output_grad;
  if (cfg_.output == Output::Sigmoid) {
    // d(sigmoid(z))/dz = s(1-s), with s recomputed from the cached z.
    const Matrix& z = cache.pre.back();
    for (std::size_t i = 0; i < delta.a.size(); ++i) {
      const double s = sigmoid_scalar(z.a[i]);
      delta.a[i] *= s * (1.0 - s);
    }
  }
  for (int l = L - 1; l >= 0; --l) {
    const Matrix& input_act = l == 0 ? cache.input : cache.post[l - 1];
    accumulate_at_b(input_act, delta, grads.w[l]);
    for (int i = 0; i < delta.rows; ++i) {
      const double* drow = delta.row(i);
      for (int j = 0; j < delta.cols; ++j) grads.b[l][j] += drow[j];
    }
    const bool need_input = l > 0 || input_grad != nullptr;
    if (!need_input) break;
    // delta_prev = (delta * W^T) .* act'(z_prev)
    const Matrix& w = weights_[l];
    Matrix prev(delta.rows, w.rows);
    for (int i = 0; i < delta.rows; ++i) {
      const double* drow = delta.row(i);
      double* prow = prev.row(i);
      for (int k = 0; k < w.rows; ++k) {
        const double* wrow = w.row(k);
        double s = 0.0;
        for (int j = 0; j < w.cols; ++j) s += drow[j] * wrow[j];
        prow[k] = s;
      }
    }
    if (l > 0) {
      const Matrix& z = cache.pre[l - 1];
      for (std::size_t i = 0; i < prev.a.size(); ++i)
        prev.a[i] *= hidden_grad(cfg_.hidden, cfg_.leak, z.a[i]);
    }
    delta = std::move(prev);
  }
  if (input_grad) *input_grad = std::move(delta);
  return grads;
}

ParamGrads Mlp::zero_grads() const {
  ParamGrads g;
  for (int l = 0; l < n_layers(); ++l) {
    g.w.emplace_back(weights_[l].rows, weights_[l].cols);
    g.b.emplace_back(biases_[l].size(), 0.0);
  }
  return g;
}

bool Mlp::params_equal(const Mlp& other) const {
  if (n_layers() != other.n_layers()) return false;
  for (int l = 0; l < n_layers(); ++l)
    if (weights_[l].a != other.weights_[l].a || biases_[l] != other.biases_[l])
      return false;
  return true;
}

std::string Mlp::save_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "mlp 1\nsizes";
  for (int s : cfg_.sizes) os << ' ' << s;
  os << "\nhidden "
     << (cfg_.hidden == Hidden::LeakyRelu ? "leaky_relu" : "tanh") << ' '
     << cfg_.leak << "\noutput "
     << (cfg_.output == Output::Linear ? "linear" : "sigmoid") << '\n';
  for (int l = 0; l < n_layers(); ++l) {
    os << "w" << l;
    for (double x : weights_[l].a) os << ' ' << x;
    os << "\nb" << l;
    for (double x : biases_[l]) os << ' ' << x;
    os << '\n';
  }
  return os.str();
}

Mlp Mlp::load_text(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  int version;
  if (!(in >> tok >> version) || tok != "mlp" || version != 1)
    throw std::invalid_argument("Mlp::load_text: bad header");
  MlpConfig cfg;
  if (!(in >> tok) || tok != "sizes")
    throw std::invalid_argument("Mlp::load_text: expected sizes");
  {
    std::string rest;
    std::getline(in, rest);
    std::istringstream ls(rest);
    int s;
    while (ls >> s) cfg.sizes.push_back(s);
  }
  std::string hidden_name;
  if (!(in >> tok >> hidden_name >> cfg.leak) || tok != "hidden")
    throw std::invalid_argument("Mlp::load_text: expected hidden");
  cfg.hidden = hidden_name == "tanh" ? Hidden::Tanh : Hidden::LeakyRelu;
  std::string output_name;
  if (!(in >> tok >> output_name) || tok != "output")
    throw std::invalid_argument("Mlp::load_text: expected output");
  cfg.output = output_name == "sigmoid" ? Output::Sigmoid : Output::Linear;

  RngStream dummy(0);
  Mlp net = Mlp::init(cfg, dummy);
  for (int l = 0; l < net.n_layers(); ++l) {
    std::ostringstream wtag, btag;
    wtag << 'w' << l;
    btag << 'b' << l;
    if (!(in >> tok) || tok != wtag.str())
      throw std::invalid_argument("Mlp::load_text: expected " + wtag.str());
    for (double& x : net.weights_[l].a)
      if (!(in >> x)) throw std::invalid_argument("Mlp::load_text: short weights");
    if (!(in >> tok) || tok != btag.str())
      throw std::invalid_argument("Mlp::load_text: expected " + btag.str());
    for (double& x : net.biases_[l])
      if (!(in >> x)) throw std::invalid_argument("Mlp::load_text: short biases");
  }
  return net;
}

// ---------------------------------------------------------------------------
//  Adam
// ---------------------------------------------------------------------------

AdamState AdamState::init(const Mlp& net, const AdamConfig& cfg_) {
  AdamState st;
  st.cfg = cfg_;
  st.m = net.zero_grads();
  st.v = net.zero_grads();
  return st;
}

void adam_step(AdamState& state, Mlp& net, const ParamGrads& grads,
               double sign) {
  const int L = net.n_layers();
  for (int l = 0; l < L; ++l) {
    for (double g : grads.w[l].a)
      if (!std::isfinite(g))
        throw StepRejected("adam_step: non-finite weight gradient in layer " +
                               std::to_string(l),
                           l);
    for (double g : grads.b[l])
      if (!std::isfinite(g))
        throw StepRejected("adam_step: non-finite bias gradient in layer " +
                               std::to_string(l),
                           l);
  }
  state.t += 1;
  double lr = state.cfg.lr;
  if (state.cfg.decay_steps > 0) {
    const double frac =
        1.0 - static_cast<double>(state.t - 1) / state.cfg.decay_steps;
    lr *= frac > 0.0 ? frac : 0.0;
  }
  const double c1 = 1.0 - std::pow(state.cfg.beta1, state.t);
  const double c2 = 1.0 - std::pow(state.cfg.beta2, state.t);
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  auto update = [&](double* p, double* m, double* v, const double* g,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = sign * g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.cfg.eps);
    }
  };
  for (int l = 0; l < L; ++l) {
    update(net.weights()[l].a.data(), state.m.w[l].a.data(),
           state.v.w[l].a.data(), grads.w[l].a.data(), grads.w[l].a.size());
    update(net.biases()[l].data(), state.m.b[l].data(), state.v.b[l].data(),
           grads.b[l].data(), grads.b[l].size());
  }
}

}  // namespace fdgan
