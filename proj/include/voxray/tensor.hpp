#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace voxray {

// Dense shapes, layout [batch, channel, depth, height, width] with trailing
// axes omitted for lower ranks. Last axis is contiguous.
using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool shape_eq(const Shape& a, const Shape& b);

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reverse-mode autodiff tensor. A Tensor is a shared handle to a graph node;
// nodes hold the forward value, an optional gradient buffer, links to parent
// tensors, and a closure that routes this node's gradient into its parents.
// Values are immutable once produced by an op; only leaf parameters are
// mutated (by the optimizer, between graph constructions).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<T> values,
                          bool requires_grad = false);

  // The primitive every op is built on: a new node with the given forward
  // value, linked to `parents`. `backward` receives the finished node and
  // must accumulate into the parents' grad buffers. requires_grad is
  // inherited from the parents.
  static Tensor from_op(const Shape& shape, std::vector<T> values,
                        std::vector<Tensor> parents,
                        std::function<void(const Tensor& self)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const;
  int dim(int axis) const;
  bool requires_grad() const;

  const std::vector<T>& values() const;
  std::vector<T>& values();  // leaf mutation (optimizer); do not call on op outputs

  bool has_grad() const;
  std::vector<T>& grad();  // allocates zeros on first access
  const std::vector<T>& grad() const;
  void zero_grad();

  T scalar() const;

  // Reverse pass from a scalar root: seeds d(root)/d(root)=1, then runs the
  // recorded closures in reverse topological order. Single-threaded.
  void backward() const;

  // Identity of the underlying node (for graph bookkeeping in tests).
  const void* node_id() const { return node_.get(); }

 private:
  struct Node;
  std::shared_ptr<Node> node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace voxray
