#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egostance/corpus.hpp"

namespace egostance {

struct ClassifierHyper {
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  std::size_t batch_size = 128;
  double dropout = 0.2;
  double learning_rate = 1e-2;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
};

void validate(const ClassifierHyper& hyper);

struct LabeledVector {
  std::vector<double> x;
  Stance y = Stance::Favor;
};

/// input -> hidden1 -> hidden2 -> 2 logits (FAVOR, AGAINST), ReLU hidden activations.
struct Model {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t parameter_count() const;
  /// Freshly initialised network (He-normal weights, small positive hidden biases).
  static Model initialise(std::size_t input_dim, const ClassifierHyper& hyper);
};

struct TrainLog {
  std::vector<double> loss;  // full-set loss without dropout; [0] before training, [e] after epoch e
};

/// Mini-batch SGD on mean softmax cross-entropy with inverted dropout on both hidden layers.
Model train(std::span<const LabeledVector> examples, const ClassifierHyper& hyper, TrainLog* log = nullptr);

struct Prediction {
  Stance label = Stance::Favor;
  double confidence = 0.5;  // max softmax probability
};

/// Equal logits resolve to FAVOR.
Prediction prediction_from_logits(double favor_logit, double against_logit);
Prediction predict(const Model& model, std::span<const double> x);
std::vector<Prediction> predict_batch(const Model& model, std::span<const std::vector<double>> xs);

/// Mean cross-entropy over `batch` without dropout.
double loss(const Model& model, std::span<const LabeledVector> batch);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  std::size_t tensors_checked = 0;
};

/// Backprop gradients against central differences (step 1e-4, shrunk while a probe flips a
/// ReLU unit) over every parameter.
/// Relative error is |a - f| / max(|a|, |f|, 1e-6).
GradientCheck gradient_check(const Model& model, std::span<const LabeledVector> batch, double step = 1e-4);

std::string format_model(const Model& model);
Model parse_model(std::string_view content);

}  // namespace egostance
