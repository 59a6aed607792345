#include "uavnfv/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "uavnfv/rng.hpp"

namespace uavnfv {

namespace {

constexpr char kMagic[4] = {'U', 'N', 'V', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

Mat activate(const Mat& z, Activation a) {
  switch (a) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Identity: break;
  }
  return z;
}

// dL/dz given dL/da and the pre-activation z.
Mat activation_grad(const Mat& z, const Mat& grad, Activation a) {
  switch (a) {
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix().cwiseProduct(grad);
    case Activation::Tanh: {
      const Mat t = z.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix().cwiseProduct(grad);
    }
    case Activation::Identity: break;
  }
  return grad;
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void Gradients::scale(double f) {
  for (auto& w : dW) w *= f;
  for (auto& b : db) b *= f;
}

double Gradients::squared_norm() const {
  double n = 0.0;
  for (const auto& w : dW) n += w.squaredNorm();
  for (const auto& b : db) n += b.squaredNorm();
  return n;
}

Mlp::Mlp(const std::vector<int>& sizes, Activation output, std::uint64_t seed)
    : sizes_(sizes), out_act_(output) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Layer layer{Mat(out, in), Vec::Zero(out)};
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < out; ++r) layer.W(r, c) = rng.uniform(-limit, limit);
    layers_.push_back(std::move(layer));
  }
}

Mat Mlp::forward(const Mat& x) const {
  Mat a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Mat z = layers_[l].W * a;
    z.colwise() += layers_[l].b;
    a = activate(z, l + 1 == layers_.size() ? out_act_ : Activation::Relu);
  }
  return a;
}

Mat Mlp::forward(const Mat& x, Tape& tape) const {
  tape.inputs.clear();
  tape.pre.clear();
  Mat a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    tape.inputs.push_back(a);
    Mat z = layers_[l].W * a;
    z.colwise() += layers_[l].b;
    a = activate(z, l + 1 == layers_.size() ? out_act_ : Activation::Relu);
    tape.pre.push_back(std::move(z));
  }
  tape.output = a;
  return a;
}

Gradients Mlp::backward(const Tape& tape, const Mat& grad_out) const {
  Gradients g;
  g.dW.resize(layers_.size());
  g.db.resize(layers_.size());
  Mat grad = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Mat dz =
        activation_grad(tape.pre[l], grad, l + 1 == layers_.size() ? out_act_ : Activation::Relu);
    g.dW[l] = dz * tape.inputs[l].transpose();
    g.db[l] = dz.rowwise().sum();
    grad = layers_[l].W.transpose() * dz;
  }
  g.dx = std::move(grad);
  return g;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

bool Mlp::operator==(const Mlp& o) const {
  if (sizes_ != o.sizes_ || out_act_ != o.out_act_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (layers_[l].W != o.layers_[l].W || layers_[l].b != o.layers_[l].b) return false;
  return true;
}

void Mlp::write(std::ostream& os) const {
  put(os, static_cast<std::uint32_t>(sizes_.size()));
  for (int s : sizes_) put(os, static_cast<std::int32_t>(s));
  put(os, static_cast<std::uint8_t>(out_act_));
  for (const auto& l : layers_) {
    os.write(reinterpret_cast<const char*>(l.W.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(l.W.size())));
    os.write(reinterpret_cast<const char*>(l.b.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(l.b.size())));
  }
}

Mlp Mlp::read(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint has an implausible layer count");
  Mlp net;
  for (std::uint32_t i = 0; i < n; ++i) net.sizes_.push_back(get<std::int32_t>(is));
  net.out_act_ = static_cast<Activation>(get<std::uint8_t>(is));
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    Layer layer{Mat(net.sizes_[l + 1], net.sizes_[l]), Vec(net.sizes_[l + 1])};
    is.read(reinterpret_cast<char*>(layer.W.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.W.size())));
    is.read(reinterpret_cast<char*>(layer.b.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.b.size())));
    if (!is) throw std::runtime_error("checkpoint truncated");
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& l : net.layers()) {
    mW_.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    vW_.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    mb_.push_back(Vec::Zero(l.b.size()));
    vb_.push_back(Vec::Zero(l.b.size()));
  }
}

void Adam::step(Mlp& net, const Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    mW_[l] = beta1_ * mW_[l] + (1.0 - beta1_) * g.dW[l];
    vW_[l] = beta2_ * vW_[l] + (1.0 - beta2_) * g.dW[l].cwiseProduct(g.dW[l]);
    mb_[l] = beta1_ * mb_[l] + (1.0 - beta1_) * g.db[l];
    vb_[l] = beta2_ * vb_[l] + (1.0 - beta2_) * g.db[l].cwiseProduct(g.db[l]);
    layers[l].W.array() -=
        lr_ * (mW_[l].array() / c1) / ((vW_[l].array() / c2).sqrt() + eps_);
    layers[l].b.array() -=
        lr_ * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps_);
  }
}

void sync_target(const Mlp& main, Mlp& target, double tau) {
  auto& t = target.layers();
  const auto& m = main.layers();
  if (tau >= 1.0) {
    target = main;
    return;
  }
  for (std::size_t l = 0; l < t.size(); ++l) {
    t[l].W = (1.0 - tau) * t[l].W + tau * m[l].W;
    t[l].b = (1.0 - tau) * t[l].b + tau * m[l].b;
  }
}

void save_networks(const std::vector<const Mlp*>& nets, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
  os.write(kMagic, sizeof kMagic);
  put(os, kFormatVersion);
  put(os, static_cast<std::uint32_t>(nets.size()));
  for (const auto* n : nets) n->write(os);
}

std::vector<Mlp> load_networks(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("'" + path.string() + "' is not a checkpoint");
  if (get<std::uint32_t>(is) != kFormatVersion)
    throw std::runtime_error("unsupported checkpoint version");
  const auto n = get<std::uint32_t>(is);
  std::vector<Mlp> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(Mlp::read(is));
  return out;
}

}  // namespace uavnfv
