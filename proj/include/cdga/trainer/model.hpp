#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace cdga {

struct InputShape {
  int channels = 3;
  int height = 16;
  int width = 16;

  int size() const { return channels * height * width; }
};

// Registry id plus architecture knobs. `pretrained` loads initial weights
// from `weights_path` (a file written by save_params).
struct ModelSpec {
  std::string arch = "cnn_small";  // "linear", "mlp" or "cnn_small"
  bool pretrained = false;
  std::filesystem::path weights_path;
  int hidden = 32;    // mlp width
  int filters = 8;    // cnn_small conv filters
  int pool_grid = 4;  // cnn_small pooling grid (pool_grid x pool_grid cells)
  int input_size = 16;  // images are resized to input_size x input_size

  InputShape input_shape() const { return {3, input_size, input_size}; }
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& doc);

// Classifier = backbone producing features, followed by a linear-softmax
// head. All parameters live in one flat vector; the head occupies the tail as
// [W (classes x features, column-major) | b (classes)], i.e. the column-major
// vectorisation of [W b].
//
// Inputs are matrices with one flattened CHW image per column.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::unique_ptr<Model> clone() const = 0;
  virtual std::string arch() const = 0;

  int input_dim() const { return input_dim_; }
  int feature_dim() const { return feature_dim_; }
  int num_classes() const { return num_classes_; }

  Eigen::Index num_params() const { return params_.size(); }
  Eigen::Index head_size() const {
    return static_cast<Eigen::Index>(num_classes_) * (feature_dim_ + 1);
  }
  Eigen::Index head_offset() const { return num_params() - head_size(); }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& theta);

  Eigen::MatrixXd features(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;  // classes x N
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  // Weighted cross-entropy sum_k w_k * ce_k at the current parameters; an
  // empty weight span means the plain mean. Gradients are optional.
  double loss(const Eigen::MatrixXd& x, std::span<const int> labels,
              std::span<const double> weights = {}, Eigen::VectorXd* grad_params = nullptr,
              Eigen::MatrixXd* grad_input = nullptr) const;

  // Same, evaluated at arbitrary parameters `theta`.
  double loss_at(const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                 std::span<const int> labels, std::span<const double> weights = {},
                 Eigen::VectorXd* grad_params = nullptr,
                 Eigen::MatrixXd* grad_input = nullptr) const;

 protected:
  Model(int input_dim, int feature_dim, int num_classes, Eigen::Index backbone_size);

  struct Cache {
    std::vector<Eigen::MatrixXd> tensors;
  };

  virtual Eigen::MatrixXd backbone_forward(const double* theta, const Eigen::MatrixXd& x,
                                           Cache* cache) const = 0;
  // Accumulates parameter gradients into d_theta (backbone part only).
  virtual void backbone_backward(const double* theta, const Eigen::MatrixXd& x,
                                 const Cache& cache, const Eigen::MatrixXd& d_features,
                                 double* d_theta, Eigen::MatrixXd* d_input) const = 0;

  Eigen::VectorXd& mutable_params() { return params_; }

 private:
  int input_dim_;
  int feature_dim_;
  int num_classes_;
  Eigen::VectorXd params_;
};

// Builds a freshly initialised model (seeded), or loads pretrained weights.
std::unique_ptr<Model> make_model(const ModelSpec& spec, int num_classes, std::uint64_t seed);

std::vector<std::string> registered_architectures();

void save_params(const Eigen::VectorXd& theta, const std::filesystem::path& path);
Eigen::VectorXd load_params(const std::filesystem::path& path);

// Column-wise numerically stable softmax.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

}  // namespace cdga
