#include "scn/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace scn::ad {

namespace {

std::atomic<long> g_next_id{1};

std::shared_ptr<Node> make_node(Eigen::MatrixXd value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward_fn = std::move(backward_fn);
  n->id = g_next_id.fetch_add(1);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  return n;
}

void check(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("autodiff shape error: ") + what);
}

Eigen::ArrayXXd stable_sigmoid(const Eigen::MatrixXd& x) {
  Eigen::ArrayXXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = x(i, j);
      out(i, j) = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
  }
  return out;
}

}  // namespace

Var constant(Eigen::MatrixXd v) { return Var(make_node(std::move(v), {}, nullptr)); }

Var leaf(Eigen::MatrixXd v) {
  auto n = make_node(std::move(v), {}, nullptr);
  n->requires_grad = true;
  return Var(n);
}

Var matmul(const Var& a, const Var& b) {
  check(a.cols() == b.rows(), "matmul inner dimensions");
  auto node = make_node(a.value() * b.value(), {a.node(), b.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad.noalias() += n.grad * pb.value.transpose();
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      pb.grad.noalias() += pa.value.transpose() * n.grad;
    }
  });
  return Var(node);
}

Var add(const Var& a, const Var& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add shapes");
  auto node = make_node(a.value() + b.value(), {a.node(), b.node()}, [](Node& n) {
    for (auto& p : n.parents) {
      if (p->requires_grad) {
        p->ensure_grad();
        p->grad += n.grad;
      }
    }
  });
  return Var(node);
}

Var sub(const Var& a, const Var& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "sub shapes");
  auto node = make_node(a.value() - b.value(), {a.node(), b.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += n.grad;
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      pb.grad -= n.grad;
    }
  });
  return Var(node);
}

Var cmul(const Var& a, const Var& b) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), "cmul shapes");
  auto node = make_node(a.value().cwiseProduct(b.value()), {a.node(), b.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += n.grad.cwiseProduct(pb.value);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      pb.grad += n.grad.cwiseProduct(pa.value);
    }
  });
  return Var(node);
}

Var scale(const Var& a, double s) {
  auto node = make_node(a.value() * s, {a.node()}, [s](Node& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += n.grad * s;
    }
  });
  return Var(node);
}

Var add_scalar(const Var& a, const Var& s) {
  check(s.rows() == 1 && s.cols() == 1, "add_scalar expects 1x1 addend");
  auto node = make_node((a.value().array() + s.value()(0, 0)).matrix(), {a.node(), s.node()},
                        [](Node& n) {
                          auto& pa = *n.parents[0];
                          auto& ps = *n.parents[1];
                          if (pa.requires_grad) {
                            pa.ensure_grad();
                            pa.grad += n.grad;
                          }
                          if (ps.requires_grad) {
                            ps.ensure_grad();
                            ps.grad(0, 0) += n.grad.sum();
                          }
                        });
  return Var(node);
}

Var transpose(const Var& a) {
  auto node = make_node(a.value().transpose(), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += n.grad.transpose();
    }
  });
  return Var(node);
}

Var vconcat(const Var& a, const Var& b) {
  check(a.cols() == b.cols(), "vconcat column counts");
  Eigen::MatrixXd v(a.rows() + b.rows(), a.cols());
  v.topRows(a.rows()) = a.value();
  v.bottomRows(b.rows()) = b.value();
  auto node = make_node(std::move(v), {a.node(), b.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += n.grad.topRows(pa.value.rows());
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      pb.grad += n.grad.bottomRows(pb.value.rows());
    }
  });
  return Var(node);
}

Var stack_cols(const std::vector<Var>& cols) {
  check(!cols.empty(), "stack_cols needs at least one column");
  const Eigen::Index r = cols.front().rows();
  Eigen::MatrixXd v(r, static_cast<Eigen::Index>(cols.size()));
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) {
    check(cols[i].rows() == r && cols[i].cols() == 1, "stack_cols expects equal n x 1 columns");
    v.col(static_cast<Eigen::Index>(i)) = cols[i].value();
    parents.push_back(cols[i].node());
  }
  auto node = make_node(std::move(v), std::move(parents), [](Node& n) {
    for (size_t i = 0; i < n.parents.size(); ++i) {
      auto& p = *n.parents[i];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      p.grad += n.grad.col(static_cast<Eigen::Index>(i));
    }
  });
  return Var(node);
}

Var rows(const Var& a, Eigen::Index r0, Eigen::Index n) {
  check(r0 >= 0 && n >= 1 && r0 + n <= a.rows(), "rows slice bounds");
  auto node =
      make_node(a.value().middleRows(r0, n), {a.node()}, [r0, n](Node& nd) {
        auto& pa = *nd.parents[0];
        if (pa.requires_grad) {
          pa.ensure_grad();
          pa.grad.middleRows(r0, n) += nd.grad;
        }
      });
  return Var(node);
}

Var reshape(const Var& a, Eigen::Index r, Eigen::Index c) {
  check(r * c == a.rows() * a.cols(), "reshape element count");
  Eigen::MatrixXd v = Eigen::Map<const Eigen::MatrixXd>(a.value().data(), r, c);
  auto node = make_node(std::move(v), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad += Eigen::Map<const Eigen::MatrixXd>(n.grad.data(), pa.value.rows(),
                                                   pa.value.cols());
    }
  });
  return Var(node);
}

Var tanh(const Var& a) {
  auto node = make_node(a.value().array().tanh().matrix(), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad.array() += n.grad.array() * (1.0 - n.value.array().square());
    }
  });
  return Var(node);
}

Var sigmoid(const Var& a) {
  auto node = make_node(stable_sigmoid(a.value()).matrix(), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      pa.grad.array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
    }
  });
  return Var(node);
}

Var row_softmax(const Var& a) {
  Eigen::MatrixXd v(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double m = a.value().row(i).maxCoeff();
    Eigen::ArrayXd e = (a.value().row(i).array() - m).exp();
    v.row(i) = (e / e.sum()).matrix();
  }
  auto node = make_node(std::move(v), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      const auto y = n.value.row(i).array();
      const auto g = n.grad.row(i).array();
      double dot = (g * y).sum();
      pa.grad.row(i).array() += y * (g - dot);
    }
  });
  return Var(node);
}

Var softmax(const Var& a) {
  check(a.cols() == 1, "softmax expects a column vector");
  double m = a.value().maxCoeff();
  Eigen::ArrayXd e = (a.value().col(0).array() - m).exp();
  Eigen::MatrixXd v = (e / e.sum()).matrix();
  auto node = make_node(std::move(v), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    const auto y = n.value.col(0).array();
    const auto g = n.grad.col(0).array();
    double dot = (g * y).sum();
    pa.grad.col(0).array() += y * (g - dot);
  });
  return Var(node);
}

Var logsumexp(const Var& a) {
  double m = a.value().maxCoeff();
  double s = (a.value().array() - m).exp().sum();
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = m + std::log(s);
  auto node = make_node(std::move(v), {a.node()}, [](Node& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    double lse = n.value(0, 0);
    pa.grad.array() += n.grad(0, 0) * (pa.value.array() - lse).exp();
  });
  return Var(node);
}

Var gather(const Var& a, std::vector<std::pair<Eigen::Index, Eigen::Index>> cells) {
  check(!cells.empty(), "gather needs at least one cell");
  Eigen::MatrixXd v(static_cast<Eigen::Index>(cells.size()), 1);
  for (size_t i = 0; i < cells.size(); ++i) {
    check(cells[i].first >= 0 && cells[i].first < a.rows() && cells[i].second >= 0 &&
              cells[i].second < a.cols(),
          "gather cell bounds");
    v(static_cast<Eigen::Index>(i), 0) = a.value()(cells[i].first, cells[i].second);
  }
  auto node = make_node(std::move(v), {a.node()}, [cells = std::move(cells)](Node& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (size_t i = 0; i < cells.size(); ++i) {
      pa.grad(cells[i].first, cells[i].second) += n.grad(static_cast<Eigen::Index>(i), 0);
    }
  });
  return Var(node);
}

Var bce_with_logit(const Var& logit, double target) {
  check(logit.rows() == 1 && logit.cols() == 1, "bce_with_logit expects 1x1 logit");
  double x = logit.scalar();
  double loss = std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = loss;
  auto node = make_node(std::move(v), {logit.node()}, [target](Node& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    double x = pa.value(0, 0);
    double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    pa.grad(0, 0) += n.grad(0, 0) * (sig - target);
  });
  return Var(node);
}

void backward(const Var& loss) {
  check(loss.rows() == 1 && loss.cols() == 1, "backward expects a 1x1 loss");
  Node* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing trainable upstream

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  // Children always have larger ids than their parents, so descending id
  // order is a valid reverse topological order.
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (Node* n : order) {
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

}  // namespace scn::ad
