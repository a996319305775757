#include "mpf/tape.hpp"

#include <cmath>
#include <cstring>

namespace mpf::ad {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConst: return "const";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kNeg: return "neg";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kSquare: return "square";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kMinimum: return "minimum";
    case OpKind::kConcat: return "concat";
    case OpKind::kSoftplus: return "softplus";
  }
  return "?";
}

namespace {

[[noreturn]] void shape_fail(OpKind kind, const Tensor& a) {
  throw ShapeError(std::string(op_name(kind)) + ": bad operand shape " + shape_str(a.shape));
}

[[noreturn]] void shape_fail2(OpKind kind, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(kind)) + ": operand shapes " + shape_str(a.shape) +
                   " and " + shape_str(b.shape) + " do not match");
}

// y[n,m] += x[n,k] · w[k,m]
void matmul_acc(const double* x, const double* w, double* y, std::size_t n, std::size_t k,
                std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* yrow = y + i * m;
    const double* xrow = x + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double xv = xrow[kk];
      const double* wrow = w + kk * m;
      for (std::size_t j = 0; j < m; ++j) yrow[j] += xv * wrow[j];
    }
  }
}

// dx[n,k] += gy[n,m] · wᵀ  (w is [k,m])
void matmul_acc_bt(const double* gy, const double* w, double* dx, std::size_t n, std::size_t k,
                   std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gyrow = gy + i * m;
    double* dxrow = dx + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* wrow = w + kk * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += gyrow[j] * wrow[j];
      dxrow[kk] += acc;
    }
  }
}

// dw[k,m] += xᵀ[k,n] · gy[n,m]
void matmul_acc_at(const double* x, const double* gy, double* dw, std::size_t n, std::size_t k,
                   std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xrow = x + i * k;
    const double* gyrow = gy + i * m;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double xv = xrow[kk];
      if (xv == 0.0) continue;
      double* dwrow = dw + kk * m;
      for (std::size_t j = 0; j < m; ++j) dwrow[j] += xv * gyrow[j];
    }
  }
}

}  // namespace

std::int64_t Tape::intern(const Tensor& v, OpKind kind, bool needs_grad) {
  std::int64_t id = static_cast<std::int64_t>(values_.size());
  values_.push_back(v);
  values_.back().node = id;
  needs_grad_.push_back(needs_grad ? 1 : 0);
  if (kind == OpKind::kLeaf) leaves_.push_back(id);
  return id;
}

Tensor Tape::leaf(const Tensor& v) {
  Tensor out = v;
  out.node = intern(v, OpKind::kLeaf, true);
  return out;
}

Tensor Tape::constant(const Tensor& v) {
  Tensor out = v;
  out.node = intern(v, OpKind::kConst, false);
  return out;
}

void Tape::clear() {
  values_.clear();
  needs_grad_.clear();
  entries_.clear();
  leaves_.clear();
}

// Interns untracked operands as constants and appends the tape entry.
Tensor record(Tape& t, OpKind kind, std::array<const Tensor*, 3> ins, Tensor out, double k) {
  if (!all_finite(out)) {
    std::string msg = std::string("non-finite output of ") + op_name(kind) + " on shapes";
    for (const Tensor* in : ins) {
      if (in != nullptr) msg += " " + shape_str(in->shape);
    }
    throw NumericError(msg);
  }
  Tape::Entry e;
  e.kind = kind;
  e.k = k;
  bool any_grad = false;
  for (std::size_t i = 0; i < ins.size(); ++i) {
    if (ins[i] == nullptr) continue;
    const Tensor& in = *ins[i];
    std::int64_t node = in.node;
    if (node == kNoNode) {
      node = t.intern(in, OpKind::kConst, false);
    }
    e.in[i] = node;
    any_grad = any_grad || t.needs_grad_[static_cast<std::size_t>(node)];
  }
  e.out = t.intern(out, kind, any_grad);
  t.entries_.push_back(e);
  out.node = e.out;
  return out;
}

Tensor affine(Tape& t, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) shape_fail(OpKind::kAffine, w);
  const std::size_t k = w.shape[0];
  const std::size_t m = w.shape[1];
  if (x.rank() > 2 || x.cols() != k) shape_fail2(OpKind::kAffine, x, w);
  if (b.size() != m) shape_fail2(OpKind::kAffine, w, b);
  const std::size_t n = x.rows();

  Tensor out = (x.rank() == 2) ? Tensor::zeros({n, m}) : Tensor::zeros({m});
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(out.data.data() + i * m, b.data.data(), m * sizeof(double));
  }
  matmul_acc(x.data.data(), w.data.data(), out.data.data(), n, k, m);
  return record(t, OpKind::kAffine, {&x, &w, &b}, std::move(out), 0.0);
}

namespace {

template <typename F>
Tensor unary(Tape& t, OpKind kind, const Tensor& x, F f) {
  Tensor out = x;
  out.node = kNoNode;
  for (double& v : out.data) v = f(v);
  return record(t, kind, {&x, nullptr, nullptr}, std::move(out), 0.0);
}

template <typename F>
Tensor binary(Tape& t, OpKind kind, const Tensor& a, const Tensor& b, F f) {
  if (!same_shape(a.shape, b.shape)) shape_fail2(kind, a, b);
  Tensor out = a;
  out.node = kNoNode;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
  return record(t, kind, {&a, &b, nullptr}, std::move(out), 0.0);
}

}  // namespace

Tensor tanh_op(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kTanh, x, [](double v) { return std::tanh(v); });
}

Tensor exp_op(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kExp, x, [](double v) { return std::exp(v); });
}

Tensor log_op(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kLog, x, [](double v) { return std::log(v); });
}

Tensor neg(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kNeg, x, [](double v) { return -v; });
}

Tensor square(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kSquare, x, [](double v) { return v * v; });
}

Tensor softplus(Tape& t, const Tensor& x) {
  return unary(t, OpKind::kSoftplus, x, [](double v) {
    // max(x,0) + log1p(exp(-|x|)) is exact and overflow-free
    return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  });
}

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
  return binary(t, OpKind::kAdd, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(Tape& t, const Tensor& a, const Tensor& b) {
  return binary(t, OpKind::kSub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
  return binary(t, OpKind::kMul, a, b, [](double x, double y) { return x * y; });
}

Tensor minimum(Tape& t, const Tensor& a, const Tensor& b) {
  return binary(t, OpKind::kMinimum, a, b, [](double x, double y) { return x <= y ? x : y; });
}

Tensor scale(Tape& t, const Tensor& x, double k) {
  Tensor out = x;
  out.node = kNoNode;
  for (double& v : out.data) v *= k;
  return record(t, OpKind::kScale, {&x, nullptr, nullptr}, std::move(out), k);
}

Tensor sum(Tape& t, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data) acc += v;
  return record(t, OpKind::kSum, {&x, nullptr, nullptr}, Tensor::scalar(acc), 0.0);
}

Tensor mean(Tape& t, const Tensor& x) {
  if (x.data.empty()) shape_fail(OpKind::kMean, x);
  double acc = 0.0;
  for (double v : x.data) acc += v;
  return record(t, OpKind::kMean, {&x, nullptr, nullptr},
                Tensor::scalar(acc / static_cast<double>(x.data.size())), 0.0);
}

Tensor row_sum(Tape& t, const Tensor& x) {
  if (x.rank() > 2) shape_fail(OpKind::kRowSum, x);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Tensor out = (x.rank() == 2) ? Tensor::zeros({n, 1}) : Tensor::zeros({1});
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* row = x.data.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += row[j];
    out.data[i] = acc;
  }
  return record(t, OpKind::kRowSum, {&x, nullptr, nullptr}, std::move(out), 0.0);
}

Tensor concat(Tape& t, const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() > 2) shape_fail2(OpKind::kConcat, a, b);
  if (a.rank() == 2 && a.shape[0] != b.shape[0]) shape_fail2(OpKind::kConcat, a, b);
  const std::size_t n = a.rows();
  const std::size_t da = a.cols();
  const std::size_t db = b.cols();
  Tensor out = (a.rank() == 2) ? Tensor::zeros({n, da + db}) : Tensor::zeros({da + db});
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(out.data.data() + i * (da + db), a.data.data() + i * da, da * sizeof(double));
    std::memcpy(out.data.data() + i * (da + db) + da, b.data.data() + i * db,
                db * sizeof(double));
  }
  return record(t, OpKind::kConcat, {&a, &b, nullptr}, std::move(out), 0.0);
}

Tensor add_scalar(Tape& t, const Tensor& x, double c) {
  return add(t, x, Tensor::full(x.shape, c));
}

Tensor clamp(Tape& t, const Tensor& x, double lo, double hi) {
  // min(max(x, lo), hi) with max(x, lo) = -min(-x, -lo)
  Tensor lower = neg(t, minimum(t, neg(t, x), Tensor::full(x.shape, -lo)));
  return minimum(t, lower, Tensor::full(x.shape, hi));
}

GradMap Tape::backward(const Tensor& root) const {
  if (!root.tracked() || static_cast<std::size_t>(root.node) >= values_.size()) {
    throw ShapeError("backward: root is not a node of this tape");
  }
  if (!root.is_scalar()) {
    throw ShapeError("backward: root must be scalar, got shape " + shape_str(root.shape));
  }

  std::vector<Tensor> grads(values_.size());
  auto has_grad = [&](std::int64_t n) { return !grads[static_cast<std::size_t>(n)].data.empty(); };
  auto grad_of = [&](std::int64_t n) -> Tensor& {
    Tensor& g = grads[static_cast<std::size_t>(n)];
    if (g.data.empty()) g = Tensor::zeros(values_[static_cast<std::size_t>(n)].shape);
    return g;
  };
  auto wants = [&](std::int64_t n) {
    return n != kNoNode && needs_grad_[static_cast<std::size_t>(n)];
  };

  grad_of(root.node).data[0] = 1.0;

  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    const Entry& e = *it;
    if (!has_grad(e.out) || !needs_grad_[static_cast<std::size_t>(e.out)]) continue;
    const Tensor& gy = grads[static_cast<std::size_t>(e.out)];
    const Tensor& y = values_[static_cast<std::size_t>(e.out)];

    switch (e.kind) {
      case OpKind::kAffine: {
        const Tensor& x = values_[static_cast<std::size_t>(e.in[0])];
        const Tensor& w = values_[static_cast<std::size_t>(e.in[1])];
        const std::size_t n = x.rows(), k = w.shape[0], m = w.shape[1];
        if (wants(e.in[0])) {
          matmul_acc_bt(gy.data.data(), w.data.data(), grad_of(e.in[0]).data.data(), n, k, m);
        }
        if (wants(e.in[1])) {
          matmul_acc_at(x.data.data(), gy.data.data(), grad_of(e.in[1]).data.data(), n, k, m);
        }
        if (wants(e.in[2])) {
          Tensor& gb = grad_of(e.in[2]);
          for (std::size_t i = 0; i < n; ++i) {
            const double* gyrow = gy.data.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) gb.data[j] += gyrow[j];
          }
        }
        break;
      }
      case OpKind::kTanh: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
          gx.data[i] += gy.data[i] * (1.0 - y.data[i] * y.data[i]);
        }
        break;
      }
      case OpKind::kExp: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i] * y.data[i];
        break;
      }
      case OpKind::kLog: {
        if (!wants(e.in[0])) break;
        const Tensor& x = values_[static_cast<std::size_t>(e.in[0])];
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i] / x.data[i];
        break;
      }
      case OpKind::kNeg: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] -= gy.data[i];
        break;
      }
      case OpKind::kAdd: {
        for (int s = 0; s < 2; ++s) {
          if (!wants(e.in[s])) continue;
          Tensor& g = grad_of(e.in[s]);
          for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gy.data[i];
        }
        break;
      }
      case OpKind::kSub: {
        if (wants(e.in[0])) {
          Tensor& g = grad_of(e.in[0]);
          for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gy.data[i];
        }
        if (wants(e.in[1])) {
          Tensor& g = grad_of(e.in[1]);
          for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] -= gy.data[i];
        }
        break;
      }
      case OpKind::kMul: {
        const Tensor& a = values_[static_cast<std::size_t>(e.in[0])];
        const Tensor& b = values_[static_cast<std::size_t>(e.in[1])];
        if (wants(e.in[0])) {
          Tensor& g = grad_of(e.in[0]);
          for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gy.data[i] * b.data[i];
        }
        if (wants(e.in[1])) {
          Tensor& g = grad_of(e.in[1]);
          for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += gy.data[i] * a.data[i];
        }
        break;
      }
      case OpKind::kScale: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += gy.data[i] * e.k;
        break;
      }
      case OpKind::kSquare: {
        if (!wants(e.in[0])) break;
        const Tensor& x = values_[static_cast<std::size_t>(e.in[0])];
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
          gx.data[i] += gy.data[i] * 2.0 * x.data[i];
        }
        break;
      }
      case OpKind::kSum: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        const double g = gy.data[0];
        for (double& v : gx.data) v += g;
        break;
      }
      case OpKind::kMean: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        const double g = gy.data[0] / static_cast<double>(gx.data.size());
        for (double& v : gx.data) v += g;
        break;
      }
      case OpKind::kRowSum: {
        if (!wants(e.in[0])) break;
        Tensor& gx = grad_of(e.in[0]);
        const std::size_t n = gx.rows(), d = gx.cols();
        for (std::size_t i = 0; i < n; ++i) {
          const double g = gy.data[i];
          double* row = gx.data.data() + i * d;
          for (std::size_t j = 0; j < d; ++j) row[j] += g;
        }
        break;
      }
      case OpKind::kMinimum: {
        const Tensor& a = values_[static_cast<std::size_t>(e.in[0])];
        const Tensor& b = values_[static_cast<std::size_t>(e.in[1])];
        // Subgradient: ties route to the first operand.
        if (wants(e.in[0])) {
          Tensor& g = grad_of(e.in[0]);
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (a.data[i] <= b.data[i]) g.data[i] += gy.data[i];
          }
        }
        if (wants(e.in[1])) {
          Tensor& g = grad_of(e.in[1]);
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (a.data[i] > b.data[i]) g.data[i] += gy.data[i];
          }
        }
        break;
      }
      case OpKind::kConcat: {
        const Tensor& a = values_[static_cast<std::size_t>(e.in[0])];
        const Tensor& b = values_[static_cast<std::size_t>(e.in[1])];
        const std::size_t n = a.rows(), da = a.cols(), db = b.cols();
        if (wants(e.in[0])) {
          Tensor& g = grad_of(e.in[0]);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < da; ++j) {
              g.data[i * da + j] += gy.data[i * (da + db) + j];
            }
          }
        }
        if (wants(e.in[1])) {
          Tensor& g = grad_of(e.in[1]);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < db; ++j) {
              g.data[i * db + j] += gy.data[i * (da + db) + da + j];
            }
          }
        }
        break;
      }
      case OpKind::kSoftplus: {
        if (!wants(e.in[0])) break;
        const Tensor& x = values_[static_cast<std::size_t>(e.in[0])];
        Tensor& gx = grad_of(e.in[0]);
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
          gx.data[i] += gy.data[i] / (1.0 + std::exp(-x.data[i]));
        }
        break;
      }
      case OpKind::kLeaf:
      case OpKind::kConst:
        break;
    }
  }

  GradMap out;
  out.reserve(leaves_.size());
  for (std::int64_t leaf : leaves_) {
    if (has_grad(leaf)) {
      out.emplace(leaf, std::move(grads[static_cast<std::size_t>(leaf)]));
    } else {
      out.emplace(leaf, Tensor::zeros(values_[static_cast<std::size_t>(leaf)].shape));
    }
  }
  return out;
}

}  // namespace mpf::ad
