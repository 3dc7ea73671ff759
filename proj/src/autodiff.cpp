#include "hag/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace hag {

namespace {

std::atomic<std::size_t> g_next_tape_id{1};

std::size_t fresh_tape_id() { return g_next_tape_id.fetch_add(1); }

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": shape " + a.str() + " " + why);
}

}  // namespace

std::string Shape::str() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) shape_fail("constant", shape, "does not match data length");
  auto n = std::make_shared<detail::Node>();
  n->shape = shape;
  n->value = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->shape = shape;
  n->value.assign(shape.size(), 0.0);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor " + shape().str() + " is not a scalar");
  return node_->value[0];
}

Tape::Tape(bool record) : record_(record), id_(fresh_tape_id()) {
#ifndef NDEBUG
  check_finite_ = true;
#else
  check_finite_ = false;
#endif
}

Tensor Tape::make(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs) {
  auto n = std::make_shared<detail::Node>();
  n->shape = shape;
  n->value = std::move(value);
  n->tape_id = id_;
  if (record_) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (check_finite_) {
    for (double v : n->value) {
      if (!std::isfinite(v)) throw NumericError("non-finite value in tensor " + shape.str());
    }
  }
  return Tensor(std::move(n));
}

void Tape::record(const Tensor& out, std::function<void()> rule) {
  if (!out.requires_grad()) return;
  entries_.emplace_back(out.handle(), std::move(rule));
}

void Tape::clear() {
  entries_.clear();
  id_ = fresh_tape_id();
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) throw ShapeError("backward: loss " + loss.shape().str() + " is not a scalar");
  if (loss.node()->tape_id != id_) {
    throw std::logic_error("backward: loss was not produced on the current tape (already cleared?)");
  }
  if (loss.requires_grad()) {
    loss.node()->grad_buffer()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (!it->first->grad.empty()) it->second();
    }
  }
  clear();
}

// ---- linear algebra ------------------------------------------------------

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_fail("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      if (s == 0.0) continue;
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
    }
  }
  Tensor r = make({m, n}, std::move(out), {a, b});
  auto an = a.handle(), bn = b.handle();
  auto* rn = r.node();
  record(r, [an, bn, rn, m, k, n] {
    const double* g = rn->grad.data();
    if (an->requires_grad) {
      double* ga = an->grad_buffer();
      const double* bv = bn->value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      double* gb = bn->grad_buffer();
      const double* av = an->value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double s = av[i * k + p];
          if (s == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
        }
    }
  });
  return r;
}

Tensor Tape::transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
  Tensor r = make({n, m}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, m, n] {
    double* ga = an->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += rn->grad[j * m + i];
  });
  return r;
}

namespace {
enum Binary { kAdd, kSub, kMul };
}  // namespace

Tensor Tape::binary(const Tensor& a, const Tensor& b, int kind, const char* name) {
  const bool bcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
  if (!bcast && a.shape() != b.shape()) shape_fail(name, a.shape(), b.shape());
  const std::size_t n = a.size(), cols = a.cols();
  std::vector<double> out(n);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = bv[bcast ? i % cols : i];
    out[i] = kind == kAdd ? av[i] + y : kind == kSub ? av[i] - y : av[i] * y;
  }
  Tensor r = make(a.shape(), std::move(out), {a, b});
  auto an = a.handle(), bn = b.handle();
  auto* rn = r.node();
  record(r, [an, bn, rn, kind, bcast, n, cols] {
    const double* g = rn->grad.data();
    if (an->requires_grad) {
      double* ga = an->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) ga[i] += kind == kMul ? g[i] * bn->value[bcast ? i % cols : i] : g[i];
    }
    if (bn->requires_grad) {
      double* gb = bn->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = bcast ? i % cols : i;
        gb[j] += kind == kAdd ? g[i] : kind == kSub ? -g[i] : g[i] * an->value[i];
      }
    }
  });
  return r;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) { return binary(a, b, kAdd, "add"); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return binary(a, b, kSub, "sub"); }
Tensor Tape::mul(const Tensor& a, const Tensor& b) { return binary(a, b, kMul, "mul"); }

Tensor Tape::scale(const Tensor& a, double s) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= s;
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, s] {
    double* ga = an->grad_buffer();
    for (std::size_t i = 0; i < rn->grad.size(); ++i) ga[i] += s * rn->grad[i];
  });
  return r;
}

Tensor Tape::add_scalar(const Tensor& a, double s) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v += s;
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn] {
    double* ga = an->grad_buffer();
    for (std::size_t i = 0; i < rn->grad.size(); ++i) ga[i] += rn->grad[i];
  });
  return r;
}

// ---- structural ------------------------------------------------------------

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].shape(), p.shape());
    cols += p.cols();
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<double> out(rows * cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(p.values().data() + i * p.cols(), p.cols(), out.data() + i * cols + off);
    off += p.cols();
  }
  Tensor r = make({rows, cols}, std::move(out), {});
  if (record_ && any_grad) {
    r.node()->requires_grad = true;
    std::vector<std::shared_ptr<detail::Node>> ins;
    for (const auto& p : parts) ins.push_back(p.handle());
    auto* rn = r.node();
    record(r, [ins = std::move(ins), rn, rows, cols] {
      std::size_t off = 0;
      for (const auto& in : ins) {
        const std::size_t c = in->shape.cols;
        if (in->requires_grad) {
          double* g = in->grad_buffer();
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < c; ++j) g[i * c + j] += rn->grad[i * cols + off + j];
        }
        off += c;
      }
    });
  }
  return r;
}

Tensor Tape::concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].shape(), p.shape());
    rows += p.rows();
    any_grad = any_grad || p.requires_grad();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  Tensor r = make({rows, cols}, std::move(out), {});
  if (record_ && any_grad) {
    r.node()->requires_grad = true;
    std::vector<std::shared_ptr<detail::Node>> ins;
    for (const auto& p : parts) ins.push_back(p.handle());
    auto* rn = r.node();
    record(r, [ins = std::move(ins), rn] {
      std::size_t off = 0;
      for (const auto& in : ins) {
        const std::size_t n = in->value.size();
        if (in->requires_grad) {
          double* g = in->grad_buffer();
          for (std::size_t i = 0; i < n; ++i) g[i] += rn->grad[off + i];
        }
        off += n;
      }
    });
  }
  return r;
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  if (start + count > a.cols() || count == 0) shape_fail("slice_cols", a.shape(), "cannot be sliced as requested");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows * count);
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(a.values().data() + i * cols + start, count, out.data() + i * count);
  Tensor r = make({rows, count}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, rows, cols, start, count] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * cols + start + j] += rn->grad[i * count + j];
  });
  return r;
}

Tensor Tape::gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  const std::size_t cols = a.cols();
  std::vector<double> out(rows.size() * cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(rows[i]) + " out of range for " + a.shape().str());
    }
    std::copy_n(a.values().data() + rows[i] * cols, cols, out.data() + i * cols);
  }
  Tensor r = make({rows.size(), cols}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, idx = std::vector<std::size_t>(rows.begin(), rows.end()), cols] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) g[idx[i] * cols + j] += rn->grad[i * cols + j];
  });
  return r;
}

Tensor Tape::gather_entries(const Tensor& a, std::span<const std::size_t> index, std::size_t out_cols) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (index.size() != rows * out_cols) shape_fail("gather_entries", a.shape(), "does not match index length");
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < out_cols; ++j) {
      const std::size_t c = index[i * out_cols + j];
      if (c >= cols) throw ShapeError("gather_entries: column " + std::to_string(c) + " out of range for " + a.shape().str());
      out[i * out_cols + j] = a.values()[i * cols + c];
    }
  Tensor r = make({rows, out_cols}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, idx = std::vector<std::size_t>(index.begin(), index.end()), rows, cols, out_cols] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < out_cols; ++j) g[i * cols + idx[i * out_cols + j]] += rn->grad[i * out_cols + j];
  });
  return r;
}

Tensor Tape::pick(const Tensor& a, std::size_t r, std::size_t c) {
  if (r >= a.rows() || c >= a.cols()) {
    throw ShapeError("pick: (" + std::to_string(r) + "," + std::to_string(c) + ") out of range for " + a.shape().str());
  }
  const std::size_t i = r * a.cols() + c;
  Tensor out = make({1, 1}, {a.values()[i]}, {a});
  auto an = a.handle();
  auto* rn = out.node();
  record(out, [an, rn, i] { an->grad_buffer()[i] += rn->grad[0]; });
  return out;
}

// ---- normalizers -----------------------------------------------------------

Tensor Tape::softmax_row(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.values().data() + i * cols;
    double* y = out.data() + i * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, rows, cols] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = rn->value.data() + i * cols;
      const double* gy = rn->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += y[j] * (gy[j] - dot);
    }
  });
  return r;
}

Tensor Tape::log_softmax_row(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.values().data() + i * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(x[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = x[j] - lz;
  }
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, rows, cols] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* ly = rn->value.data() + i * cols;
      const double* gy = rn->grad.data() + i * cols;
      double gsum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) gsum += gy[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += gy[j] - std::exp(ly[j]) * gsum;
    }
  });
  return r;
}

Tensor Tape::masked_softmax_row(const Tensor& a, std::span<const unsigned char> mask) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (mask.size() != a.size()) shape_fail("masked_softmax_row", a.shape(), "does not match mask length");
  std::vector<double> out(a.size(), 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a.values().data() + i * cols;
    const unsigned char* m = mask.data() + i * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j)
      if (m[j]) mx = std::max(mx, x[j]);
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    double* y = out.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j)
      if (m[j]) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) y[j] /= z;
  }
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  // Masked entries have y = 0, so the unmasked softmax rule zeroes them out.
  record(r, [an, rn, rows, cols] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = rn->value.data() + i * cols;
      const double* gy = rn->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += y[j] * (gy[j] - dot);
    }
  });
  return r;
}

// ---- pointwise -------------------------------------------------------------

template <class F, class D>
Tensor Tape::pointwise(const Tensor& a, F f, D dfdx) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.values()[i]);
  Tensor r = make(a.shape(), std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, dfdx] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < rn->grad.size(); ++i) g[i] += rn->grad[i] * dfdx(an->value[i], rn->value[i]);
  });
  return r;
}

Tensor Tape::relu(const Tensor& a) {
  return pointwise(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Tape::leaky_relu(const Tensor& a, double slope) {
  return pointwise(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                       [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

// Subgradient 0 at the origin.
Tensor Tape::abs(const Tensor& a) {
  return pointwise(a, [](double x) { return std::fabs(x); },
                       [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor Tape::tanh(const Tensor& a) {
  return pointwise(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::sigmoid(const Tensor& a) {
  return pointwise(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                       [](double, double y) { return y * (1.0 - y); });
}

// ---- reductions ------------------------------------------------------------

Tensor Tape::mean_rows(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (rows == 0) shape_fail("mean_rows", a.shape(), "has no rows");
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += a.values()[i * cols + j];
  for (double& v : out) v /= static_cast<double>(rows);
  Tensor r = make({1, cols}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, rows, cols] {
    double* g = an->grad_buffer();
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += rn->grad[j] * inv;
  });
  return r;
}

// Column-wise max; ties route the gradient to the first maximal row.
Tensor Tape::max_rows(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (rows == 0) shape_fail("max_rows", a.shape(), "has no rows");
  std::vector<double> out(cols);
  std::vector<std::size_t> arg(cols, 0);
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = a.values()[j];
    for (std::size_t i = 1; i < rows; ++i) {
      const double v = a.values()[i * cols + j];
      if (v > out[j]) {
        out[j] = v;
        arg[j] = i;
      }
    }
  }
  Tensor r = make({1, cols}, std::move(out), {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn, arg = std::move(arg), cols] {
    double* g = an->grad_buffer();
    for (std::size_t j = 0; j < cols; ++j) g[arg[j] * cols + j] += rn->grad[j];
  });
  return r;
}

Tensor Tape::sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor r = make({1, 1}, {s}, {a});
  auto an = a.handle();
  auto* rn = r.node();
  record(r, [an, rn] {
    double* g = an->grad_buffer();
    for (std::size_t i = 0; i < an->value.size(); ++i) g[i] += rn->grad[0];
  });
  return r;
}

// ---- recurrent cells -------------------------------------------------------

LstmState Tape::lstm_step(const Tensor& x, const LstmState& state, const LstmParams& p) {
  const std::size_t hidden = state.h.cols();
  if (p.w_hidden.rows() != hidden || p.w_hidden.cols() != 4 * hidden) {
    shape_fail("lstm_step", state.h.shape(), p.w_hidden.shape());
  }
  if (state.c.shape() != state.h.shape()) shape_fail("lstm_step", state.h.shape(), state.c.shape());
  Tensor z = add(add(matmul(x, p.w_input), matmul(state.h, p.w_hidden)), p.bias);
  Tensor i = sigmoid(slice_cols(z, 0, hidden));
  Tensor f = sigmoid(slice_cols(z, hidden, hidden));
  Tensor g = tanh(slice_cols(z, 2 * hidden, hidden));
  Tensor o = sigmoid(slice_cols(z, 3 * hidden, hidden));
  Tensor c = add(mul(f, state.c), mul(i, g));
  Tensor h = mul(o, tanh(c));
  return {h, c};
}

BiLstmStates Tape::bilstm_encode(const std::vector<Tensor>& inputs, const LstmParams& fwd, const LstmParams& bwd) {
  if (inputs.empty()) throw ShapeError("bilstm_encode: empty sequence");
  const std::size_t hidden = fwd.w_hidden.rows();
  BiLstmStates out;
  out.forward.resize(inputs.size());
  out.backward.resize(inputs.size());
  LstmState s{Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden})};
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    s = lstm_step(inputs[t], s, fwd);
    out.forward[t] = s.h;
  }
  s = {Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden})};
  for (std::size_t t = inputs.size(); t-- > 0;) {
    s = lstm_step(inputs[t], s, bwd);
    out.backward[t] = s.h;
  }
  return out;
}

}  // namespace hag
