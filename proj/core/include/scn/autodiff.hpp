#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "scn/common.hpp"

namespace scn::ad {

/// One tape entry: a matrix value, its gradient, and a closure that pushes
/// the gradient into its parents. Scalars are 1x1, column vectors n x 1.
class Node {
 public:
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  long id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() == 0) grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
};

/// Value-semantic handle to a tape node. Graphs are built by free
/// functions below; a fresh graph is built per example, so nodes are
/// reclaimed when the last handle goes out of scope.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  bool valid() const { return node_ != nullptr; }
  const Eigen::MatrixXd& value() const { return node_->value; }
  const Eigen::MatrixXd& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Non-trainable input.
Var constant(Eigen::MatrixXd v);
/// Trainable input; receives a gradient on backward().
Var leaf(Eigen::MatrixXd v);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);  // elementwise product
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, const Var& s);  // s is 1x1, broadcast
Var transpose(const Var& a);
Var vconcat(const Var& a, const Var& b);  // stack vertically
Var stack_cols(const std::vector<Var>& cols);  // n x 1 vars -> n x k
Var rows(const Var& a, Eigen::Index r0, Eigen::Index n);
Var reshape(const Var& a, Eigen::Index r, Eigen::Index c);  // column-major
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var row_softmax(const Var& a);  // softmax along each row, max-subtracted
Var softmax(const Var& a);      // column-vector softmax, max-subtracted
Var logsumexp(const Var& a);    // over all entries -> 1x1, max-subtracted
Var gather(const Var& a, std::vector<std::pair<Eigen::Index, Eigen::Index>> cells);
/// Binary cross-entropy of sigmoid(logit) against target, on the logit
/// scale (numerically safe for large |logit|).
Var bce_with_logit(const Var& logit, double target);

/// Reverse pass from a 1x1 loss node. Gradients accumulate into every
/// reachable node with requires_grad; leaves keep theirs for harvesting.
void backward(const Var& loss);

}  // namespace scn::ad
