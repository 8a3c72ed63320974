#include "egostance/clf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "egostance/error.hpp"
#include "egostance/rng.hpp"

namespace egostance {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kHiddenBiasInit = 0.01;

struct Gradients {
  MatrixXd w1, w2, w3;
  VectorXd b1, b2, b3;
};

int class_index(Stance s) { return s == Stance::Favor ? 0 : 1; }

MatrixXd relu(const MatrixXd& z) { return z.cwiseMax(0.0); }

MatrixXd relu_grad(const MatrixXd& z) { return (z.array() > 0.0).cast<double>(); }

using Pattern = std::vector<bool>;

/// Forward + optional backward over a column batch. Masks are inverted-dropout scale
/// factors (0 or 1/(1-p)); pass nullptr to disable dropout. Returns mean cross-entropy.
double forward_backward(const Model& m, const MatrixXd& x, const std::vector<int>& labels, const MatrixXd* mask1,
                        const MatrixXd* mask2, Gradients* grads, Pattern* pattern = nullptr) {
  const auto batch = static_cast<double>(x.cols());
  const MatrixXd z1 = (m.w1 * x).colwise() + m.b1;
  MatrixXd h1 = relu(z1);
  if (mask1) h1.array() *= mask1->array();
  const MatrixXd z2 = (m.w2 * h1).colwise() + m.b2;
  MatrixXd h2 = relu(z2);
  if (mask2) h2.array() *= mask2->array();
  const MatrixXd z3 = (m.w3 * h2).colwise() + m.b3;
  if (pattern) {
    // Which hidden units are active for each column, both layers concatenated.
    pattern->clear();
    for (Eigen::Index i = 0; i < z1.size(); ++i) pattern->push_back(z1.data()[i] > 0.0);
    for (Eigen::Index i = 0; i < z2.size(); ++i) pattern->push_back(z2.data()[i] > 0.0);
  }

  double loss = 0.0;
  MatrixXd delta3(z3.rows(), z3.cols());
  for (Eigen::Index c = 0; c < z3.cols(); ++c) {
    const double mx = z3.col(c).maxCoeff();
    const double lse = mx + std::log((z3.col(c).array() - mx).exp().sum());
    const int y = labels[static_cast<std::size_t>(c)];
    loss += lse - z3(y, c);
    delta3.col(c) = (z3.col(c).array() - lse).exp();
    delta3(y, c) -= 1.0;
  }
  loss /= batch;
  if (!grads) return loss;

  delta3 /= batch;
  grads->w3 = delta3 * h2.transpose();
  grads->b3 = delta3.rowwise().sum();
  MatrixXd delta2 = m.w3.transpose() * delta3;
  if (mask2) delta2.array() *= mask2->array();
  delta2.array() *= relu_grad(z2).array();
  grads->w2 = delta2 * h1.transpose();
  grads->b2 = delta2.rowwise().sum();
  MatrixXd delta1 = m.w2.transpose() * delta2;
  if (mask1) delta1.array() *= mask1->array();
  delta1.array() *= relu_grad(z1).array();
  grads->w1 = delta1 * x.transpose();
  grads->b1 = delta1.rowwise().sum();
  return loss;
}

MatrixXd to_columns(std::span<const LabeledVector> examples, std::span<const std::size_t> idx, std::size_t dim) {
  MatrixXd x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& v = examples[idx[c]].x;
    x.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return x;
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < p ? 0.0 : keep_scale;
  }
  return mask;
}

double full_loss(const Model& m, std::span<const LabeledVector> examples) {
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> labels;
  for (const auto& e : examples) labels.push_back(class_index(e.y));
  return forward_backward(m, to_columns(examples, idx, m.input_dim()), labels, nullptr, nullptr, nullptr);
}

}  // namespace

void validate(const ClassifierHyper& h) {
  if (!(h.dropout >= 0.0 && h.dropout < 1.0)) throw Error(ErrorKind::Validation, "dropout must be in [0, 1)");
  if (h.batch_size < 1) throw Error(ErrorKind::Validation, "batch size must be >= 1");
  if (h.hidden1 < 1 || h.hidden2 < 1) throw Error(ErrorKind::Validation, "hidden layer widths must be >= 1");
  if (!(h.learning_rate > 0.0)) throw Error(ErrorKind::Validation, "learning rate must be > 0");
}

std::size_t Model::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size());
}

Model Model::initialise(std::size_t input_dim, const ClassifierHyper& hyper) {
  validate(hyper);
  if (input_dim == 0) throw Error(ErrorKind::Validation, "input dimension must be >= 1");
  Rng rng(derive_seed(hyper.seed, 0x1417));
  auto he = [&](std::size_t rows, std::size_t cols) {
    MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = scale * rng.normal();
    }
    return w;
  };
  Model m;
  m.seed = hyper.seed;
  m.w1 = he(hyper.hidden1, input_dim);
  m.b1 = VectorXd::Constant(static_cast<Eigen::Index>(hyper.hidden1), kHiddenBiasInit);
  m.w2 = he(hyper.hidden2, hyper.hidden1);
  m.b2 = VectorXd::Constant(static_cast<Eigen::Index>(hyper.hidden2), kHiddenBiasInit);
  m.w3 = he(2, hyper.hidden2);
  m.b3 = VectorXd::Zero(2);
  return m;
}

Model train(std::span<const LabeledVector> examples, const ClassifierHyper& hyper, TrainLog* log) {
  validate(hyper);
  if (examples.size() < 2) throw Error(ErrorKind::Validation, "training needs at least 2 examples");
  const std::size_t dim = examples.front().x.size();
  bool seen[2] = {false, false};
  for (const auto& e : examples) {
    if (e.x.size() != dim) throw Error(ErrorKind::Validation, "training vectors differ in dimension");
    seen[class_index(e.y)] = true;
  }
  if (!seen[0] || !seen[1]) throw Error(ErrorKind::Validation, "training set holds a single class");

  Model m = Model::initialise(dim, hyper);
  Rng rng(derive_seed(hyper.seed, 0xD80F));
  if (log) log->loss = {full_loss(m, examples)};

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients g;
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const MatrixXd x = to_columns(examples, idx, dim);
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (std::size_t i : idx) labels.push_back(class_index(examples[i].y));
      const auto cols = static_cast<Eigen::Index>(idx.size());
      MatrixXd mask1, mask2;
      const bool drop = hyper.dropout > 0.0;
      if (drop) {
        mask1 = dropout_mask(m.w1.rows(), cols, hyper.dropout, rng);
        mask2 = dropout_mask(m.w2.rows(), cols, hyper.dropout, rng);
      }
      const double l = forward_backward(m, x, labels, drop ? &mask1 : nullptr, drop ? &mask2 : nullptr, &g);
      epoch_loss += l * static_cast<double>(idx.size());
      const double lr = hyper.learning_rate;
      m.w1 -= lr * g.w1;
      m.b1 -= lr * g.b1;
      m.w2 -= lr * g.w2;
      m.b2 -= lr * g.b2;
      m.w3 -= lr * g.w3;
      m.b3 -= lr * g.b3;
    }
    if (log) log->loss.push_back(full_loss(m, examples));
  }
  m.final_loss = epoch_loss / static_cast<double>(examples.size());
  m.epochs_run = hyper.epochs;
  if (!m.w1.allFinite() || !m.w2.allFinite() || !m.w3.allFinite()) {
    throw Error(ErrorKind::Runtime, "training diverged (non-finite parameters)");
  }
  return m;
}

Prediction prediction_from_logits(double favor_logit, double against_logit) {
  Prediction p;
  const double hi = std::max(favor_logit, against_logit);
  const double lo = std::min(favor_logit, against_logit);
  p.confidence = 1.0 / (1.0 + std::exp(lo - hi));
  p.label = favor_logit >= against_logit ? Stance::Favor : Stance::Against;
  return p;
}

Prediction predict(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) throw Error(ErrorKind::Validation, "prediction vector dimension mismatch");
  const Eigen::Map<const VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  const VectorXd h1 = (model.w1 * v + model.b1).cwiseMax(0.0);
  const VectorXd h2 = (model.w2 * h1 + model.b2).cwiseMax(0.0);
  const VectorXd z = model.w3 * h2 + model.b3;
  return prediction_from_logits(z(0), z(1));
}

std::vector<Prediction> predict_batch(const Model& model, std::span<const std::vector<double>> xs) {
  std::vector<Prediction> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict(model, x));
  return out;
}

double loss(const Model& model, std::span<const LabeledVector> batch) {
  if (batch.empty()) throw Error(ErrorKind::Validation, "loss over an empty batch");
  for (const auto& e : batch) {
    if (e.x.size() != model.input_dim()) throw Error(ErrorKind::Validation, "loss vector dimension mismatch");
  }
  return full_loss(model, batch);
}

GradientCheck gradient_check(const Model& model, std::span<const LabeledVector> batch, double step) {
  if (batch.empty()) throw Error(ErrorKind::Validation, "gradient check over an empty batch");
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  const MatrixXd x = to_columns(batch, idx, model.input_dim());
  std::vector<int> labels;
  for (const auto& e : batch) labels.push_back(class_index(e.y));

  Gradients g;
  forward_backward(model, x, labels, nullptr, nullptr, &g);

  GradientCheck out;
  Model probe = model;
  Pattern base, probed;
  forward_backward(model, x, labels, nullptr, nullptr, nullptr, &base);
  auto check = [&](auto& param, const auto& analytic) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      // Shrink the step while either probe lands on the other side of a ReLU kink.
      double h = step;
      double up = 0.0, down = 0.0;
      for (int tries = 0; tries < 12; ++tries, h /= 4.0) {
        param.data()[i] = saved + h;
        up = forward_backward(probe, x, labels, nullptr, nullptr, nullptr, &probed);
        const bool up_same = probed == base;
        param.data()[i] = saved - h;
        down = forward_backward(probe, x, labels, nullptr, nullptr, nullptr, &probed);
        const bool down_same = probed == base;
        param.data()[i] = saved;
        if (up_same && down_same) break;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      out.max_relative_error = std::max(out.max_relative_error, std::abs(a - numeric) / denom);
      ++out.parameters_checked;
    }
    ++out.tensors_checked;
  };
  check(probe.w1, g.w1);
  check(probe.b1, g.b1);
  check(probe.w2, g.w2);
  check(probe.b2, g.b2);
  check(probe.w3, g.w3);
  check(probe.b3, g.b3);
  return out;
}

namespace {

nlohmann::ordered_json layer_json(const MatrixXd& w, const VectorXd& b) {
  nlohmann::ordered_json l;
  l["rows"] = w.rows();
  l["cols"] = w.cols();
  std::vector<double> rm;
  rm.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) rm.push_back(w(r, c));
  }
  l["weights"] = rm;
  l["bias"] = std::vector<double>(b.data(), b.data() + b.size());
  return l;
}

void layer_from(const nlohmann::json& l, MatrixXd& w, VectorXd& b) {
  const auto rows = l.at("rows").get<Eigen::Index>();
  const auto cols = l.at("cols").get<Eigen::Index>();
  const auto rm = l.at("weights").get<std::vector<double>>();
  const auto bias = l.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(rm.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != rows) {
    throw Error(ErrorKind::Parse, "model layer shape mismatch");
  }
  w.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rm[static_cast<std::size_t>(r * cols + c)];
  }
  b = Eigen::Map<const VectorXd>(bias.data(), rows);
}

}  // namespace

std::string format_model(const Model& m) {
  nlohmann::ordered_json j;
  j["format"] = "egostance-mlp";
  j["version"] = 1;
  j["layers"] = {layer_json(m.w1, m.b1), layer_json(m.w2, m.b2), layer_json(m.w3, m.b3)};
  j["final_loss"] = m.final_loss;
  j["epochs_run"] = m.epochs_run;
  j["seed"] = m.seed;
  return j.dump() + "\n";
}

Model parse_model(std::string_view content) {
  try {
    const auto j = nlohmann::json::parse(content);
    if (j.at("format").get<std::string>() != "egostance-mlp" || j.at("version").get<int>() != 1) {
      throw Error(ErrorKind::Parse, "unsupported model format");
    }
    const auto& layers = j.at("layers");
    if (layers.size() != 3) throw Error(ErrorKind::Parse, "model must have 3 layers");
    Model m;
    layer_from(layers[0], m.w1, m.b1);
    layer_from(layers[1], m.w2, m.b2);
    layer_from(layers[2], m.w3, m.b3);
    if (m.w2.cols() != m.w1.rows() || m.w3.cols() != m.w2.rows() || m.w3.rows() != 2) {
      throw Error(ErrorKind::Parse, "model layers do not chain");
    }
    m.final_loss = j.at("final_loss").get<double>();
    m.epochs_run = j.at("epochs_run").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  }
}

}  // namespace egostance
