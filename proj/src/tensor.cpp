#include "voxray/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace voxray {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) n *= e;
  return s.empty() ? 0 : n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

bool shape_eq(const Shape& a, const Shape& b) { return a == b; }

template <typename T>
struct Tensor<T>::Node : std::enable_shared_from_this<Tensor<T>::Node> {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<Tensor<T>> parents;
  std::function<void(const Tensor<T>&)> backward;
};

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return from_data(shape, std::vector<T>(std::size_t(shape_numel(shape)), T(0)),
                   requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  return from_data(shape,
                   std::vector<T>(std::size_t(shape_numel(shape)), value),
                   requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(const Shape& shape, std::vector<T> values,
                               bool requires_grad) {
  if (shape.empty() || shape.size() > 5)
    throw TensorError("tensor rank must be 1..5, got shape " + shape_str(shape));
  for (int e : shape)
    if (e <= 0) throw TensorError("non-positive extent in shape " + shape_str(shape));
  if (std::int64_t(values.size()) != shape_numel(shape))
    throw TensorError("data length " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape));
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->shape = shape;
  t.node_->values = std::move(values);
  t.node_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_op(const Shape& shape, std::vector<T> values,
                             std::vector<Tensor> parents,
                             std::function<void(const Tensor&)> backward) {
  Tensor t = from_data(shape, std::move(values), false);
  bool needs = false;
  for (const auto& p : parents) needs = needs || (p.defined() && p.requires_grad());
  t.node_->requires_grad = needs;
  if (needs) {
    t.node_->parents = std::move(parents);
    t.node_->backward = std::move(backward);
  }
  return t;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return node_->shape;
}

template <typename T>
std::int64_t Tensor<T>::numel() const {
  return shape_numel(node_->shape);
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  return node_->shape.at(std::size_t(axis));
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return node_->requires_grad;
}

template <typename T>
const std::vector<T>& Tensor<T>::values() const {
  return node_->values;
}

template <typename T>
std::vector<T>& Tensor<T>::values() {
  return node_->values;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return defined() && !node_->grad.empty();
}

template <typename T>
std::vector<T>& Tensor<T>::grad() {
  if (node_->grad.empty()) node_->grad.assign(std::size_t(numel()), T(0));
  return node_->grad;
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
  if (node_->grad.empty()) throw TensorError("gradient not allocated");
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
T Tensor<T>::scalar() const {
  if (numel() != 1)
    throw TensorError("scalar() on tensor of shape " + shape_str(shape()));
  return node_->values[0];
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1)
    throw TensorError("backward() requires a scalar root, got " +
                      shape_str(shape()));
  if (!node_->requires_grad) return;
  // Iterative post-order DFS; reversing it gives a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next].node_.get();
      ++next;
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  const_cast<Tensor<T>*>(this)->grad()[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward || n->grad.empty()) continue;
    for (auto& p : n->parents)
      if (p.defined() && p.requires_grad()) const_cast<Tensor<T>&>(p).grad();
    Tensor<T> self;
    self.node_ = n->shared_from_this();
    n->backward(self);
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace voxray
