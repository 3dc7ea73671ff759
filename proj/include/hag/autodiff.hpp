#pragma once

// Dense reverse-mode automatic differentiation over row-major matrices.
//
// Every quantity is a 2-D matrix; vectors are 1 x n rows and scalars are 1 x 1.
// A Tape records the backward rule of each operation it evaluates. Parameters
// are leaf tensors that live outside any tape and accumulate gradients across
// backward passes until zero_grad() is called.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hag {

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::size_t tape_id = 0;  // 0 = leaf (parameter or constant)

  double* grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad.data();
  }
};
}  // namespace detail

// Shared handle to a node. Copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  // Empty span when no gradient has reached this tensor yet.
  std::span<const double> grad() const { return node_->grad; }
  double grad_at(std::size_t i) const { return node_->grad.empty() ? 0.0 : node_->grad[i]; }
  void zero_grad() { node_->grad.clear(); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& handle() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
  friend class Tape;
};

struct LstmParams {
  Tensor w_input;   // in x 4H, gate order i, f, g, o
  Tensor w_hidden;  // H x 4H
  Tensor bias;      // 1 x 4H
};

struct LstmState {
  Tensor h;
  Tensor c;
};

struct BiLstmStates {
  std::vector<Tensor> forward;
  std::vector<Tensor> backward;
};

// Records operations in evaluation order and replays their backward rules in
// exact reverse. A tape is single-writer. With recording disabled it evaluates
// forward values only.
class Tape {
 public:
  explicit Tape(bool record = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return entries_.size(); }
  // Finite-value checking of every op output; on by default in debug builds.
  void set_check_finite(bool on) { check_finite_ = on; }

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  // Elementwise; b may also be a 1 x cols row broadcast over a's rows.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double s);
  Tensor add_scalar(const Tensor& a, double s);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor concat_rows(const std::vector<Tensor>& parts);
  Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
  Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
  Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
    return gather_rows(table, ids);
  }
  // out[r][c] = a[r][index[r * out_cols + c]]
  Tensor gather_entries(const Tensor& a, std::span<const std::size_t> index, std::size_t out_cols);
  Tensor pick(const Tensor& a, std::size_t r, std::size_t c);

  Tensor softmax_row(const Tensor& a);
  Tensor log_softmax_row(const Tensor& a);
  // Softmax restricted to entries with mask != 0; rows with no such entry are all zero.
  Tensor masked_softmax_row(const Tensor& a, std::span<const unsigned char> mask);

  Tensor relu(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double slope = 0.2);
  Tensor abs(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor sigmoid(const Tensor& a);

  Tensor mean_rows(const Tensor& a);
  Tensor max_rows(const Tensor& a);
  Tensor sum(const Tensor& a);

  LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmParams& p);
  BiLstmStates bilstm_encode(const std::vector<Tensor>& inputs, const LstmParams& fwd,
                             const LstmParams& bwd);

  // Seeds d(loss)/d(loss) = 1, runs every recorded backward rule in reverse
  // order, then clears the tape.
  void backward(const Tensor& loss);
  void clear();

 private:
  Tensor make(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs);
  void record(const Tensor& out, std::function<void()> rule);
  Tensor binary(const Tensor& a, const Tensor& b, int kind, const char* name);
  template <class F, class D>
  Tensor pointwise(const Tensor& a, F f, D dfdx);

  bool record_;
  bool check_finite_;
  std::size_t id_;
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::function<void()>>> entries_;
};

}  // namespace hag
