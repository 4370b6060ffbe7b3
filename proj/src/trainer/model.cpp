#include "cdga/trainer/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MapMat = Eigen::Map<MatrixXd>;
using ConstMapMat = Eigen::Map<const MatrixXd>;
using ConstMapVec = Eigen::Map<const VectorXd>;
using MapVec = Eigen::Map<VectorXd>;

json to_json(const ModelSpec& s) {
  json doc{{"arch", s.arch},           {"pretrained", s.pretrained}, {"hidden", s.hidden},
           {"filters", s.filters},     {"pool_grid", s.pool_grid},   {"input_size", s.input_size}};
  if (s.pretrained) doc["weights_path"] = s.weights_path.generic_string();
  return doc;
}

ModelSpec model_spec_from_json(const json& doc) {
  ModelSpec s;
  s.arch = doc.value("arch", s.arch);
  s.pretrained = doc.value("pretrained", s.pretrained);
  s.weights_path = doc.value("weights_path", std::string{});
  s.hidden = doc.value("hidden", s.hidden);
  s.filters = doc.value("filters", s.filters);
  s.pool_grid = doc.value("pool_grid", s.pool_grid);
  s.input_size = doc.value("input_size", s.input_size);
  return s;
}

MatrixXd softmax_columns(const MatrixXd& logits) {
  MatrixXd p(logits.rows(), logits.cols());
  for (Index k = 0; k < logits.cols(); ++k) {
    const double mx = logits.col(k).maxCoeff();
    p.col(k) = (logits.col(k).array() - mx).exp().matrix();
    p.col(k) /= p.col(k).sum();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Model base

Model::Model(int input_dim, int feature_dim, int num_classes, Index backbone_size)
    : input_dim_(input_dim), feature_dim_(feature_dim), num_classes_(num_classes) {
  if (num_classes < 1) throw InvalidArgument("model needs at least one class");
  params_ = VectorXd::Zero(backbone_size + static_cast<Index>(num_classes) * (feature_dim + 1));
}

void Model::set_params(const VectorXd& theta) {
  if (theta.size() != params_.size()) {
    throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) +
                          " entries, model expects " + std::to_string(params_.size()));
  }
  params_ = theta;
}

MatrixXd Model::features(const MatrixXd& x) const {
  if (x.rows() != input_dim_) throw InvalidArgument("input has the wrong dimension");
  return backbone_forward(params_.data(), x, nullptr);
}

MatrixXd Model::logits(const MatrixXd& x) const {
  const MatrixXd h = features(x);
  const double* head = params_.data() + head_offset();
  ConstMapMat w(head, num_classes_, feature_dim_);
  ConstMapVec b(head + static_cast<Index>(num_classes_) * feature_dim_, num_classes_);
  MatrixXd z = w * h;
  z.colwise() += b;
  return z;
}

MatrixXd Model::probabilities(const MatrixXd& x) const { return softmax_columns(logits(x)); }

std::vector<int> Model::predict(const MatrixXd& x) const {
  const MatrixXd z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Index k = 0; k < z.cols(); ++k) {
    Index arg = 0;
    z.col(k).maxCoeff(&arg);
    out[static_cast<std::size_t>(k)] = static_cast<int>(arg);
  }
  return out;
}

double Model::loss(const MatrixXd& x, std::span<const int> labels, std::span<const double> weights,
                   VectorXd* grad_params, MatrixXd* grad_input) const {
  return loss_at(params_, x, labels, weights, grad_params, grad_input);
}

double Model::loss_at(const VectorXd& theta, const MatrixXd& x, std::span<const int> labels,
                      std::span<const double> weights, VectorXd* grad_params,
                      MatrixXd* grad_input) const {
  const Index n = x.cols();
  if (x.rows() != input_dim_) throw InvalidArgument("input has the wrong dimension");
  if (theta.size() != params_.size()) throw InvalidArgument("parameter vector has the wrong size");
  if (static_cast<Index>(labels.size()) != n) throw InvalidArgument("label count mismatch");
  if (!weights.empty() && static_cast<Index>(weights.size()) != n) {
    throw InvalidArgument("weight count mismatch");
  }
  const bool need_grad = grad_params != nullptr || grad_input != nullptr;
  Cache cache;
  const MatrixXd h = backbone_forward(theta.data(), x, need_grad ? &cache : nullptr);

  const Index hoff = theta.size() - head_size();
  const double* head = theta.data() + hoff;
  ConstMapMat w(head, num_classes_, feature_dim_);
  ConstMapVec b(head + static_cast<Index>(num_classes_) * feature_dim_, num_classes_);
  MatrixXd z = w * h;
  z.colwise() += b;

  double total = 0.0;
  MatrixXd dz = need_grad ? MatrixXd(num_classes_, n) : MatrixXd();
  for (Index k = 0; k < n; ++k) {
    const int y = labels[static_cast<std::size_t>(k)];
    if (y < 0 || y >= num_classes_) throw InvalidArgument("label out of range");
    const double wk = weights.empty() ? 1.0 / static_cast<double>(n) : weights[static_cast<std::size_t>(k)];
    const double mx = z.col(k).maxCoeff();
    const VectorXd e = (z.col(k).array() - mx).exp().matrix();
    const double se = e.sum();
    total += wk * (std::log(se) + mx - z(y, k));
    if (need_grad) {
      dz.col(k) = e / se;
      dz(y, k) -= 1.0;
      dz.col(k) *= wk;
    }
  }
  if (!need_grad) return total;

  const MatrixXd dh = w.transpose() * dz;
  if (grad_params) {
    grad_params->setZero(theta.size());
    MapMat dw(grad_params->data() + hoff, num_classes_, feature_dim_);
    MapVec db(grad_params->data() + hoff + static_cast<Index>(num_classes_) * feature_dim_, num_classes_);
    dw.noalias() = dz * h.transpose();
    db = dz.rowwise().sum();
  }
  VectorXd scratch;
  double* d_theta = grad_params ? grad_params->data() : nullptr;
  if (!d_theta) {
    scratch = VectorXd::Zero(theta.size());
    d_theta = scratch.data();
  }
  backbone_backward(theta.data(), x, cache, dh, d_theta, grad_input);
  return total;
}

// ---------------------------------------------------------------------------
// Architectures

namespace {

// Features are the raw inputs: multinomial logistic regression.
class LinearModel final : public Model {
 public:
  LinearModel(int input_dim, int num_classes) : Model(input_dim, input_dim, num_classes, 0) {}

  std::unique_ptr<Model> clone() const override { return std::make_unique<LinearModel>(*this); }
  std::string arch() const override { return "linear"; }

 protected:
  MatrixXd backbone_forward(const double*, const MatrixXd& x, Cache*) const override { return x; }
  void backbone_backward(const double*, const MatrixXd&, const Cache&, const MatrixXd& d_features,
                         double*, MatrixXd* d_input) const override {
    if (d_input) *d_input = d_features;
  }
};

// One hidden ReLU layer.
class MlpModel final : public Model {
 public:
  MlpModel(int input_dim, int hidden, int num_classes)
      : Model(input_dim, hidden, num_classes, static_cast<Index>(hidden) * (input_dim + 1)) {}

  std::unique_ptr<Model> clone() const override { return std::make_unique<MlpModel>(*this); }
  std::string arch() const override { return "mlp"; }

  void init(Rng& rng) {
    VectorXd& p = mutable_params();
    const double bound = std::sqrt(6.0 / input_dim());
    for (Index i = 0; i < static_cast<Index>(feature_dim()) * input_dim(); ++i) {
      p[i] = rng.uniform(-bound, bound);
    }
  }

 protected:
  MatrixXd backbone_forward(const double* theta, const MatrixXd& x, Cache* cache) const override {
    ConstMapMat w(theta, feature_dim(), input_dim());
    ConstMapVec b(theta + static_cast<Index>(feature_dim()) * input_dim(), feature_dim());
    MatrixXd pre = w * x;
    pre.colwise() += b;
    MatrixXd h = pre.cwiseMax(0.0);
    if (cache) cache->tensors = {std::move(pre)};
    return h;
  }

  void backbone_backward(const double* theta, const MatrixXd& x, const Cache& cache,
                         const MatrixXd& d_features, double* d_theta,
                         MatrixXd* d_input) const override {
    const MatrixXd& pre = cache.tensors.at(0);
    const MatrixXd d_pre = (pre.array() > 0.0).select(d_features, 0.0);
    MapMat dw(d_theta, feature_dim(), input_dim());
    MapVec db(d_theta + static_cast<Index>(feature_dim()) * input_dim(), feature_dim());
    dw.noalias() += d_pre * x.transpose();
    db += d_pre.rowwise().sum();
    if (d_input) {
      ConstMapMat w(theta, feature_dim(), input_dim());
      *d_input = w.transpose() * d_pre;
    }
  }
};

// 3x3 convolution (padding 1) -> ReLU -> average pooling onto a fixed grid.
class ConvModel final : public Model {
 public:
  ConvModel(InputShape shape, int filters, int grid, int num_classes)
      : Model(shape.size(), filters * grid * grid, num_classes,
              static_cast<Index>(filters) * (shape.channels * 9 + 1)),
        shape_(shape),
        filters_(filters),
        grid_(grid) {
    if (grid < 1 || shape.height % grid != 0 || shape.width % grid != 0) {
      throw InvalidArgument("cnn_small: input size must be divisible by the pooling grid");
    }
  }

  std::unique_ptr<Model> clone() const override { return std::make_unique<ConvModel>(*this); }
  std::string arch() const override { return "cnn_small"; }

  void init(Rng& rng) {
    VectorXd& p = mutable_params();
    const int fan_in = shape_.channels * 9;
    const double bound = std::sqrt(6.0 / fan_in);
    for (Index i = 0; i < static_cast<Index>(filters_) * fan_in; ++i) p[i] = rng.uniform(-bound, bound);
  }

 protected:
  MatrixXd backbone_forward(const double* theta, const MatrixXd& x, Cache* cache) const override {
    const int hw = shape_.height * shape_.width;
    const int k = shape_.channels * 9;
    ConstMapMat w(theta, filters_, k);
    ConstMapVec b(theta + static_cast<Index>(filters_) * k, filters_);
    MatrixXd feats(feature_dim(), x.cols());
    if (cache) cache->tensors.resize(2 * static_cast<std::size_t>(x.cols()));
    MatrixXd patches(k, hw);
    for (Index n = 0; n < x.cols(); ++n) {
      im2col(x.col(n).data(), patches);
      MatrixXd pre = w * patches;
      pre.colwise() += b;
      pool(pre.cwiseMax(0.0), feats.col(n).data());
      if (cache) {
        cache->tensors[2 * n] = patches;
        cache->tensors[2 * n + 1] = std::move(pre);
      }
    }
    return feats;
  }

  void backbone_backward(const double* theta, const MatrixXd&, const Cache& cache,
                         const MatrixXd& d_features, double* d_theta,
                         MatrixXd* d_input) const override {
    const int k = shape_.channels * 9;
    const int hw = shape_.height * shape_.width;
    ConstMapMat w(theta, filters_, k);
    MapMat dw(d_theta, filters_, k);
    MapVec db(d_theta + static_cast<Index>(filters_) * k, filters_);
    const Index n_samples = d_features.cols();
    if (d_input) d_input->setZero(input_dim(), n_samples);
    MatrixXd d_pre(filters_, hw);
    for (Index n = 0; n < n_samples; ++n) {
      const MatrixXd& patches = cache.tensors[2 * n];
      const MatrixXd& pre = cache.tensors[2 * n + 1];
      unpool(d_features.col(n).data(), d_pre);
      d_pre = (pre.array() > 0.0).select(d_pre, 0.0);
      dw.noalias() += d_pre * patches.transpose();
      db += d_pre.rowwise().sum();
      if (d_input) {
        const MatrixXd d_patches = w.transpose() * d_pre;
        col2im(d_patches, d_input->col(n).data());
      }
    }
  }

 private:
  // patches(c*9 + ky*3 + kx, y*W + x) = in(c, y+ky-1, x+kx-1), zero outside.
  void im2col(const double* img, MatrixXd& patches) const {
    const int h = shape_.height, wd = shape_.width;
    for (int c = 0; c < shape_.channels; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const Index row = c * 9 + ky * 3 + kx;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - 1;
            for (int x = 0; x < wd; ++x) {
              const int sx = x + kx - 1;
              patches(row, y * wd + x) =
                  (sy < 0 || sy >= h || sx < 0 || sx >= wd) ? 0.0 : img[(c * h + sy) * wd + sx];
            }
          }
        }
      }
    }
  }

  void col2im(const MatrixXd& d_patches, double* d_img) const {
    const int h = shape_.height, wd = shape_.width;
    for (int c = 0; c < shape_.channels; ++c) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const Index row = c * 9 + ky * 3 + kx;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            for (int x = 0; x < wd; ++x) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= wd) continue;
              d_img[(c * h + sy) * wd + sx] += d_patches(row, y * wd + x);
            }
          }
        }
      }
    }
  }

  void pool(const MatrixXd& act, double* out) const {
    const int ch = shape_.height / grid_, cw = shape_.width / grid_;
    const double inv = 1.0 / (ch * cw);
    for (int f = 0; f < filters_; ++f) {
      for (int gy = 0; gy < grid_; ++gy) {
        for (int gx = 0; gx < grid_; ++gx) {
          double s = 0.0;
          for (int y = gy * ch; y < (gy + 1) * ch; ++y) {
            for (int x = gx * cw; x < (gx + 1) * cw; ++x) s += act(f, y * shape_.width + x);
          }
          out[(f * grid_ + gy) * grid_ + gx] = s * inv;
        }
      }
    }
  }

  void unpool(const double* d_out, MatrixXd& d_act) const {
    const int ch = shape_.height / grid_, cw = shape_.width / grid_;
    const double inv = 1.0 / (ch * cw);
    for (int f = 0; f < filters_; ++f) {
      for (int y = 0; y < shape_.height; ++y) {
        for (int x = 0; x < shape_.width; ++x) {
          d_act(f, y * shape_.width + x) = d_out[(f * grid_ + y / ch) * grid_ + x / cw] * inv;
        }
      }
    }
  }

  InputShape shape_;
  int filters_;
  int grid_;
};

void init_head(Model& model, VectorXd& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(model.feature_dim()));
  const Index w_size = static_cast<Index>(model.num_classes()) * model.feature_dim();
  for (Index i = 0; i < w_size; ++i) p[model.head_offset() + i] = rng.uniform(-bound, bound);
}

}  // namespace

std::vector<std::string> registered_architectures() { return {"cnn_small", "linear", "mlp"}; }

std::unique_ptr<Model> make_model(const ModelSpec& spec, int num_classes, std::uint64_t seed) {
  if (spec.input_size < 1) throw InvalidArgument("model input_size must be positive");
  const InputShape shape = spec.input_shape();
  Rng rng(seed);
  std::unique_ptr<Model> model;
  if (spec.arch == "linear") {
    model = std::make_unique<LinearModel>(shape.size(), num_classes);
  } else if (spec.arch == "mlp") {
    if (spec.hidden < 1) throw InvalidArgument("mlp hidden width must be positive");
    auto m = std::make_unique<MlpModel>(shape.size(), spec.hidden, num_classes);
    m->init(rng);
    model = std::move(m);
  } else if (spec.arch == "cnn_small") {
    if (spec.filters < 1) throw InvalidArgument("cnn_small filter count must be positive");
    auto m = std::make_unique<ConvModel>(shape, spec.filters, spec.pool_grid, num_classes);
    m->init(rng);
    model = std::move(m);
  } else {
    throw InvalidArgument("unknown model architecture '" + spec.arch + "'");
  }
  VectorXd p = model->params();
  init_head(*model, p, rng);
  if (spec.pretrained) {
    if (spec.weights_path.empty()) throw InvalidArgument("pretrained model needs weights_path");
    p = load_params(spec.weights_path);
  }
  model->set_params(p);
  return model;
}

void save_params(const VectorXd& theta, const fs::path& path) {
  std::string buf(sizeof(std::uint64_t) + sizeof(double) * static_cast<std::size_t>(theta.size()), '\0');
  const std::uint64_t n = static_cast<std::uint64_t>(theta.size());
  std::memcpy(buf.data(), &n, sizeof n);
  std::memcpy(buf.data() + sizeof n, theta.data(), sizeof(double) * static_cast<std::size_t>(n));
  atomic_write(path, buf);
}

VectorXd load_params(const fs::path& path) {
  const std::string buf = read_text(path);
  std::uint64_t n = 0;
  if (buf.size() < sizeof n) throw IoError("truncated parameter file " + path.string());
  std::memcpy(&n, buf.data(), sizeof n);
  if (buf.size() != sizeof n + n * sizeof(double)) throw IoError("corrupt parameter file " + path.string());
  VectorXd theta(static_cast<Index>(n));
  std::memcpy(theta.data(), buf.data() + sizeof n, n * sizeof(double));
  return theta;
}

}  // namespace cdga
