#ifndef COMPLYFED_MODEL_H_
#define COMPLYFED_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "complyfed/dataset.h"
#include "complyfed/param_vector.h"

namespace complyfed {

enum class ModelKind { kLogistic, kMlp };

// Multinomial logistic regression or a one-hidden-layer ReLU MLP.
//
// Parameter layout (weights stored out x in, row-major):
//   logistic: W [classes x input], b [classes]
//   mlp:      W1 [hidden x input], b1 [hidden], W2 [classes x hidden], b2 [classes]
struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  int num_classes = 2;

  static ModelSpec logistic(std::size_t input_dim, int num_classes) {
    return {ModelKind::kLogistic, input_dim, 0, num_classes};
  }
  static ModelSpec mlp(std::size_t input_dim, std::size_t hidden_dim, int num_classes) {
    return {ModelKind::kMlp, input_dim, hidden_dim, num_classes};
  }

  void validate() const;  // throws kInvalidSpec
  Layout layout() const;
  std::size_t num_params() const { return layout_size(layout()); }

  bool operator==(const ModelSpec &) const = default;
};

// Glorot-uniform weights, zero biases.
ParamVector init_params(const ModelSpec &spec, std::uint64_t seed);

struct ForwardResult {
  double loss = 0.0;           // mean softmax cross-entropy
  std::vector<double> probs;   // batch x classes, row-major
};

ForwardResult forward_loss(const ModelSpec &spec, const ParamVector &params, const Batch &batch);
ForwardResult forward_loss(const ModelSpec &spec, const ParamVector &params, const Dataset &data,
                           std::span<const std::size_t> rows);

// Mean gradient of the loss over the batch.
ParamVector grad(const ModelSpec &spec, const ParamVector &params, const Batch &batch);
ParamVector grad(const ModelSpec &spec, const ParamVector &params, const Dataset &data,
                 std::span<const std::size_t> rows);

std::vector<ParamVector> per_sample_grads(const ModelSpec &spec, const ParamVector &params,
                                          const Batch &batch);

// Reusable scratch space for single-sample backprop.
class GradientWorkspace {
 public:
  explicit GradientWorkspace(const ModelSpec &spec);

  // Writes d loss(x, y) / d params into out (sized num_params) and returns
  // the sample's loss.
  double sample_gradient(const ParamVector &params, std::span<const double> x, int label,
                         std::span<double> out);

 private:
  ModelSpec spec_;
  std::vector<double> hidden_pre_;
  std::vector<double> hidden_;
  std::vector<double> logits_;
  std::vector<double> hidden_grad_;
};

// Row order of one shuffled pass, cut into batches of batch_size (the last
// batch may be short).
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed);

// One shuffled pass of mini-batch SGD.
ParamVector sgd_epoch(const ModelSpec &spec, ParamVector params, const Dataset &data, double lr,
                      std::size_t batch_size, std::uint64_t shuffle_seed);

// FedProx local objective: each step follows grad + mu * (params - anchor).
ParamVector proximal_sgd_epoch(const ModelSpec &spec, ParamVector params,
                               const ParamVector &anchor, double mu, const Dataset &data,
                               double lr, std::size_t batch_size, std::uint64_t shuffle_seed);

// Argmax class per row; ties go to the lowest index.
std::vector<int> predict(const ModelSpec &spec, const ParamVector &params, const Dataset &data);

}  // namespace complyfed

#endif  // COMPLYFED_MODEL_H_
