#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "vocgan/common.hpp"
#include "vocgan/rng.hpp"

namespace vocgan {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace autodiff {
// Forward-building is suppressed inside NoGradGuard scopes (inference,
// discriminator passes whose gradients are discarded).
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace autodiff

struct NoGradGuard {
  bool saved;
  NoGradGuard() : saved(autodiff::grad_enabled_flag()) { autodiff::grad_enabled_flag() = false; }
  ~NoGradGuard() { autodiff::grad_enabled_flag() = saved; }
};

inline bool grad_enabled() { return autodiff::grad_enabled_flag(); }

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // allocated on demand, same extent as data
  bool requires_grad = false;
  // Non-leaf bookkeeping: parents keep the tape alive, backprop scatters
  // this node's grad into its parents' grads.
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void()> backprop;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  bool is_leaf() const { return !backprop; }
  bool wants_grad() const { return requires_grad || !is_leaf(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

// Shared handle to a tape node. Value semantics on the handle, the storage is
// shared; ops produce fresh nodes wired to their parents.
template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& shape) { return constant(shape, T(0)); }

  static Tensor constant(const Shape& shape, T value) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->data.assign(static_cast<size_t>(shape_numel(shape)), value);
    return Tensor(std::move(n));
  }

  static Tensor from_vector(const Shape& shape, std::vector<T> values) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
      throw ShapeError(strcat_("from_vector: shape ", shape_str(shape), " wants ",
                               shape_numel(shape), " elements, got ", values.size()));
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->data = std::move(values);
    return Tensor(std::move(n));
  }

  static Tensor scalar(T value) { return constant({1}, value); }

  static Tensor randn(const Shape& shape, Rng& rng, T stdev = T(1)) {
    auto t = zeros(shape);
    for (auto& v : t.node_->data) v = static_cast<T>(rng.normal() * static_cast<double>(stdev));
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(size_t i) const { return node_->shape.at(i); }
  size_t rank() const { return node_->shape.size(); }
  std::int64_t numel() const { return node_->numel(); }

  T* data() { return node_->data.data(); }
  const T* data() const { return node_->data.data(); }
  std::vector<T>& vec() { return node_->data; }
  const std::vector<T>& vec() const { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    if (v && !node_->is_leaf())
      throw ContractError("set_requires_grad: only leaf tensors can require grad");
    node_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  const std::vector<T>& grad() const {
    if (!has_grad()) throw ContractError("grad(): no gradient populated");
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  // New leaf holding a copy of the values, cut off from the tape.
  Tensor detach() const {
    auto n = std::make_shared<Node>();
    n->shape = node_->shape;
    n->data = node_->data;
    return Tensor(std::move(n));
  }

  T item() const {
    if (numel() != 1) throw ContractError(strcat_("item(): tensor has ", numel(), " elements"));
    return node_->data[0];
  }

  std::shared_ptr<Node> node() const { return node_; }
  Node* raw() const { return node_.get(); }

 private:
  std::shared_ptr<Node> node_;
};

namespace autodiff {

// Attaches a backprop closure to a freshly filled op result. Skipped when
// grad mode is off or no parent participates in the tape; the closure factory
// receives the result node and must only capture raw node pointers (parents
// are kept alive through the parents list).
template <typename T, typename ClosureFactory>
void wire(Tensor<T>& result, std::initializer_list<Tensor<T>> parents, ClosureFactory factory) {
  if (!grad_enabled_flag()) return;
  bool any = false;
  for (const auto& p : parents) any = any || p.raw()->wants_grad();
  if (!any) return;
  auto* node = result.raw();
  for (const auto& p : parents) node->parents.push_back(p.node());
  node->backprop = factory(node);
}

}  // namespace autodiff

// Reverse accumulation from a scalar loss. Interior grads are reset per call;
// leaf grads accumulate across calls until zero_grad.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) throw ContractError("backward: loss must be scalar");
  using NodeT = TensorNode<T>;
  NodeT* root = loss.raw();

  // Iterative post-order DFS; reverse gives a valid topological order.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* p = node->parents[next++].get();
      if (p->wants_grad() && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T(0));
  }
  root->ensure_grad();
  root->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backprop();
  }
}

}  // namespace vocgan
