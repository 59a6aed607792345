#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace uavnfv {

using Mat = Eigen::MatrixXd;  // features x batch
using Vec = Eigen::VectorXd;

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1, Relu = 2 };

struct Layer {
  Mat W;  // out x in
  Vec b;
};

struct Tape {
  std::vector<Mat> inputs;  // input to each layer
  std::vector<Mat> pre;     // pre-activation of each layer
  Mat output;
};

struct Gradients {
  std::vector<Mat> dW;
  std::vector<Vec> db;
  Mat dx;  // gradient with respect to the network input

  void scale(double f);
  double squared_norm() const;
};

// Dense network: ReLU on hidden layers, configurable output activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& sizes, Activation output, std::uint64_t seed);

  Mat forward(const Mat& x) const;
  Mat forward(const Mat& x, Tape& tape) const;
  Vec forward_one(const Vec& x) const { return forward(Mat(x)).col(0); }

  // Back-propagates dL/d(output) through the recorded pass.
  Gradients backward(const Tape& tape, const Mat& grad_out) const;

  std::size_t param_count() const;
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation output_activation() const { return out_act_; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  void write(std::ostream& os) const;
  static Mlp read(std::istream& is);

  bool operator==(const Mlp& o) const;

 private:
  std::vector<int> sizes_;
  Activation out_act_ = Activation::Identity;
  std::vector<Layer> layers_;
};

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Mlp& net, const Gradients& g);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Mat> mW_, vW_;
  std::vector<Vec> mb_, vb_;
};

// target <- (1 - tau) target + tau main; tau = 1 is a hard copy.
void sync_target(const Mlp& main, Mlp& target, double tau);

void save_networks(const std::vector<const Mlp*>& nets, const std::filesystem::path& path);
std::vector<Mlp> load_networks(const std::filesystem::path& path);

}  // namespace uavnfv
