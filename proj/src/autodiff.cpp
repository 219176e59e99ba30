#include "sentattn/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sentattn/kernels.hpp"

namespace sentattn::ad {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

Var Tape::push(Tensor val, bool requires_grad, std::function<void(Tape&)> backward) {
  Node n;
  n.val = std::move(val);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v)];
  if (n.grad.empty() && !n.val.empty()) n.grad = Tensor(n.val.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  check(val(loss).size() == 1, "backward: loss must be scalar");
  grad(loss)[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this);
  }
}

// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
  check(val(a).same_shape(val(b)), "add: shape mismatch");
  Tensor y = val(a);
  const Tensor& vb = val(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += vb[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    };
  return out;
}

Var Tape::sub(Var a, Var b) {
  check(val(a).same_shape(val(b)), "sub: shape mismatch");
  Tensor y = val(a);
  const Tensor& vb = val(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= vb[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    };
  return out;
}

Var Tape::mul(Var a, Var b) {
  check(val(a).same_shape(val(b)), "mul: shape mismatch");
  Tensor y = val(a);
  const Tensor& vb = val(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= vb[i];
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& va = t.val(a);
      const Tensor& vb2 = t.val(b);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb2[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
      }
    };
  return out;
}

Var Tape::scale(Var a, double c) {
  Tensor y = val(a);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= c;
  bool rg = requires_grad(a);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, c, out](Tape& t) {
      const Tensor& g = t.grad(out);
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    };
  return out;
}

Var Tape::add_rowvec(Var x, Var b) {
  const Tensor& vx = val(x);
  const Tensor& vb = val(b);
  check(vx.dim() == 2, "add_rowvec: x must be a matrix");
  check(static_cast<int>(vb.size()) == vx.shape(1), "add_rowvec: width mismatch");
  int rows = vx.shape(0), cols = vx.shape(1);
  Tensor y = vx;
  for (int i = 0; i < rows; ++i) {
    double* r = y.row_ptr(i);
    for (int j = 0; j < cols; ++j) r[j] += vb[static_cast<std::size_t>(j)];
  }
  bool rg = requires_grad(x) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, b, out, rows, cols](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(x)) {
        Tensor& gx = t.grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (int i = 0; i < rows; ++i) {
          const double* r = g.row_ptr(i);
          for (int j = 0; j < cols; ++j) gb[static_cast<std::size_t>(j)] += r[j];
        }
      }
    };
  return out;
}

Var Tape::relu(Var x) {
  Tensor y = val(x);
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0.0) y[i] = 0.0;
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vx = t.val(x);
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (vx[i] > 0.0) gx[i] += g[i];
    };
  return out;
}

Var Tape::sigmoid(Var x) {
  Tensor y = val(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-y[i]));
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vy = t.val(out);
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * vy[i] * (1.0 - vy[i]);
    };
  return out;
}

Var Tape::tanh_(Var x) {
  Tensor y = val(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vy = t.val(out);
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - vy[i] * vy[i]);
    };
  return out;
}

Var Tape::log_floor(Var x, double eps) {
  Tensor y = val(x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::log(y[i] > eps ? y[i] : eps);
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, eps](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vx = t.val(x);
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (vx[i] > eps) gx[i] += g[i] / vx[i];
    };
  return out;
}

Var Tape::detach(Var x) { return constant(val(x)); }

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  check(va.dim() == 2 && vb.dim() == 2 && va.shape(0) == vb.shape(0),
        "concat_cols: row mismatch");
  int rows = va.shape(0), ca = va.shape(1), cb = vb.shape(1);
  Tensor y(rows, ca + cb);
  for (int i = 0; i < rows; ++i) {
    double* r = y.row_ptr(i);
    const double* ra = va.row_ptr(i);
    const double* rb = vb.row_ptr(i);
    for (int j = 0; j < ca; ++j) r[j] = ra[j];
    for (int j = 0; j < cb; ++j) r[ca + j] = rb[j];
  }
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out, rows, ca, cb](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad(a);
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
      }
    };
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows: no parts");
  int cols = val(parts[0]).cols();
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    check(val(p).dim() == 2 && val(p).shape(1) == cols, "concat_rows: width mismatch");
    rows += val(p).shape(0);
    rg = rg || requires_grad(p);
  }
  Tensor y(rows, cols);
  int at = 0;
  for (Var p : parts) {
    const Tensor& vp = val(p);
    for (int i = 0; i < vp.shape(0); ++i, ++at)
      for (int j = 0; j < cols; ++j) y.at(at, j) = vp.at(i, j);
  }
  Var out = push(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<Var> ps = parts;
    nodes_.back().backward = [ps, out, cols](Tape& t) {
      const Tensor& g = t.grad(out);
      int at2 = 0;
      for (Var p : ps) {
        int pr = t.val(p).shape(0);
        if (t.requires_grad(p)) {
          Tensor& gp = t.grad(p);
          for (int i = 0; i < pr; ++i)
            for (int j = 0; j < cols; ++j) gp.at(i, j) += g.at(at2 + i, j);
        }
        at2 += pr;
      }
    };
  }
  return out;
}

Var Tape::gather_rows(Var x, std::vector<int> idx) {
  const Tensor& vx = val(x);
  check(vx.dim() == 2, "gather_rows: x must be a matrix");
  int cols = vx.shape(1);
  Tensor y(static_cast<int>(idx.size()), cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;  // stays zero
    const double* src = vx.row_ptr(idx[i]);
    double* dst = y.row_ptr(static_cast<int>(i));
    for (int j = 0; j < cols; ++j) dst[j] = src[j];
  }
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, idx = std::move(idx), cols](Tape& t) {
      const Tensor& g = t.grad(out);
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0) continue;
        double* dst = gx.row_ptr(idx[i]);
        const double* src = g.row_ptr(static_cast<int>(i));
        for (int j = 0; j < cols; ++j) dst[j] += src[j];
      }
    };
  return out;
}

Var Tape::row_mask_mix(Var a, Var b, std::vector<double> mask) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  check(va.same_shape(vb), "row_mask_mix: shape mismatch");
  check(static_cast<int>(mask.size()) == va.shape(0), "row_mask_mix: mask size");
  int rows = va.shape(0), cols = va.shape(1);
  Tensor y(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double m = mask[static_cast<std::size_t>(i)];
    const double* ra = va.row_ptr(i);
    const double* rb = vb.row_ptr(i);
    double* r = y.row_ptr(i);
    for (int j = 0; j < cols; ++j) r[j] = m * ra[j] + (1.0 - m) * rb[j];
  }
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out, mask = std::move(mask), rows, cols](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a)) {
        Tensor& ga = t.grad(a);
        for (int i = 0; i < rows; ++i) {
          double m = mask[static_cast<std::size_t>(i)];
          for (int j = 0; j < cols; ++j) ga.at(i, j) += m * g.at(i, j);
        }
      }
      if (t.requires_grad(b)) {
        Tensor& gb = t.grad(b);
        for (int i = 0; i < rows; ++i) {
          double m = 1.0 - mask[static_cast<std::size_t>(i)];
          for (int j = 0; j < cols; ++j) gb.at(i, j) += m * g.at(i, j);
        }
      }
    };
  return out;
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  check(va.dim() == 2 && vb.dim() == 2 && va.shape(1) == vb.shape(0),
        "matmul: shape mismatch");
  int m = va.shape(0), k = va.shape(1), n = vb.shape(1);
  Tensor y(m, n);
  kernels::matmul_nn(va.data(), vb.data(), y.data(), m, k, n);
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out, m, k, n](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a))
        kernels::matmul_nt(g.data(), t.val(b).data(), t.grad(a).data(), m, n, k, true);
      if (t.requires_grad(b))
        kernels::matmul_tn(t.val(a).data(), g.data(), t.grad(b).data(), k, m, n, true);
    };
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  check(va.dim() == 2 && vb.dim() == 2 && va.shape(1) == vb.shape(1),
        "matmul_nt: shape mismatch");
  int m = va.shape(0), k = va.shape(1), n = vb.shape(0);
  Tensor y(m, n);
  kernels::matmul_nt(va.data(), vb.data(), y.data(), m, k, n);
  bool rg = requires_grad(a) || requires_grad(b);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [a, b, out, m, k, n](Tape& t) {
      const Tensor& g = t.grad(out);
      if (t.requires_grad(a))
        kernels::matmul_nn(g.data(), t.val(b).data(), t.grad(a).data(), m, n, k, true);
      if (t.requires_grad(b))
        kernels::matmul_tn(g.data(), t.val(a).data(), t.grad(b).data(), n, m, k, true);
    };
  return out;
}

Var Tape::mh_scores(Var Q, Var K, int heads, double scale, bool causal, int valid_cols) {
  const Tensor& vq = val(Q);
  const Tensor& vk = val(K);
  check(vq.dim() == 2 && vk.dim() == 2 && vq.shape(1) == vk.shape(1),
        "mh_scores: shape mismatch");
  int m = vq.shape(0), n = vk.shape(0), d = vq.shape(1);
  check(d % heads == 0, "mh_scores: heads must divide width");
  int hd = d / heads;
  int vc = valid_cols < 0 ? n : valid_cols;

  Tensor s(std::vector<int>{heads, m, n});
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < m; ++i) {
      const double* q = vq.row_ptr(i) + h * hd;
      double* out = &s.at(h, i, 0);
      int lim = causal ? std::min(i + 1, vc) : vc;
      for (int j = 0; j < lim; ++j) {
        const double* k = vk.row_ptr(j) + h * hd;
        double acc = 0.0;
        for (int dd = 0; dd < hd; ++dd) acc += q[dd] * k[dd];
        out[j] = scale * acc;
      }
      for (int j = lim; j < n; ++j) out[j] = kNegInf;
    }

  bool rg = requires_grad(Q) || requires_grad(K);
  Var out = push(std::move(s), rg, nullptr);
  if (rg)
    nodes_.back().backward = [Q, K, out, heads, scale, causal, vc, m, n, hd](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vq2 = t.val(Q);
      const Tensor& vk2 = t.val(K);
      bool gq = t.requires_grad(Q), gk = t.requires_grad(K);
      Tensor* GQ = gq ? &t.grad(Q) : nullptr;
      Tensor* GK = gk ? &t.grad(K) : nullptr;
      for (int h = 0; h < heads; ++h)
        for (int i = 0; i < m; ++i) {
          const double* grow = &g.at(h, i, 0);
          int lim = causal ? std::min(i + 1, vc) : vc;
          for (int j = 0; j < lim; ++j) {
            double gv = scale * grow[j];
            if (gv == 0.0) continue;
            if (gq) {
              double* dq = GQ->row_ptr(i) + h * hd;
              const double* k = vk2.row_ptr(j) + h * hd;
              for (int dd = 0; dd < hd; ++dd) dq[dd] += gv * k[dd];
            }
            if (gk) {
              double* dk = GK->row_ptr(j) + h * hd;
              const double* q = vq2.row_ptr(i) + h * hd;
              for (int dd = 0; dd < hd; ++dd) dk[dd] += gv * q[dd];
            }
          }
        }
    };
  return out;
}

Var Tape::softmax_lastdim(Var x) {
  const Tensor& vx = val(x);
  int n = vx.shape(vx.dim() - 1);
  int rows = static_cast<int>(vx.size()) / n;
  Tensor y = vx;
  kernels::softmax_rows(y.data(), rows, n);
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, rows, n](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vy = t.val(out);
      Tensor& gx = t.grad(x);
      for (int i = 0; i < rows; ++i) {
        const double* gr = g.data() + static_cast<std::size_t>(i) * n;
        const double* yr = vy.data() + static_cast<std::size_t>(i) * n;
        double* o = gx.data() + static_cast<std::size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += gr[j] * yr[j];
        for (int j = 0; j < n; ++j) o[j] += yr[j] * (gr[j] - dot);
      }
    };
  return out;
}

Var Tape::mh_mix(Var W, Var V, int heads, bool causal) {
  const Tensor& vw = val(W);
  const Tensor& vv = val(V);
  check(vw.dim() == 3 && vw.shape(0) == heads, "mh_mix: W must be [H,M,N]");
  check(vv.dim() == 2 && vw.shape(2) == vv.shape(0), "mh_mix: V rows mismatch");
  int m = vw.shape(1), n = vw.shape(2), d = vv.shape(1);
  check(d % heads == 0, "mh_mix: heads must divide width");
  int hd = d / heads;

  Tensor y(m, d);
  for (int h = 0; h < heads; ++h)
    for (int i = 0; i < m; ++i) {
      const double* w = &vw.at(h, i, 0);
      double* out = y.row_ptr(i) + h * hd;
      int lim = causal ? std::min(i + 1, n) : n;
      for (int j = 0; j < lim; ++j) {
        double wv = w[j];
        if (wv == 0.0) continue;
        const double* v = vv.row_ptr(j) + h * hd;
        for (int dd = 0; dd < hd; ++dd) out[dd] += wv * v[dd];
      }
    }

  bool rg = requires_grad(W) || requires_grad(V);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [W, V, out, heads, causal, m, n, hd](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vw2 = t.val(W);
      const Tensor& vv2 = t.val(V);
      bool gw = t.requires_grad(W), gv = t.requires_grad(V);
      Tensor* GW = gw ? &t.grad(W) : nullptr;
      Tensor* GV = gv ? &t.grad(V) : nullptr;
      for (int h = 0; h < heads; ++h)
        for (int i = 0; i < m; ++i) {
          const double* grow = g.row_ptr(i) + h * hd;
          int lim = causal ? std::min(i + 1, n) : n;
          for (int j = 0; j < lim; ++j) {
            if (gw) {
              const double* v = vv2.row_ptr(j) + h * hd;
              double acc = 0.0;
              for (int dd = 0; dd < hd; ++dd) acc += grow[dd] * v[dd];
              GW->at(h, i, j) += acc;
            }
            if (gv) {
              double wv = vw2.at(h, i, j);
              if (wv != 0.0) {
                double* dv = GV->row_ptr(j) + h * hd;
                for (int dd = 0; dd < hd; ++dd) dv[dd] += wv * grow[dd];
              }
            }
          }
        }
    };
  return out;
}

Var Tape::segment_sum_lastdim(Var x, std::vector<int> seg_of, int num_segments) {
  const Tensor& vx = val(x);
  int n = vx.shape(vx.dim() - 1);
  check(static_cast<int>(seg_of.size()) == n, "segment_sum: map size mismatch");
  int rows = static_cast<int>(vx.size()) / n;

  std::vector<int> shape = vx.shape();
  shape.back() = num_segments;
  Tensor y(shape);
  for (int i = 0; i < rows; ++i) {
    const double* src = vx.data() + static_cast<std::size_t>(i) * n;
    double* dst = y.data() + static_cast<std::size_t>(i) * num_segments;
    for (int j = 0; j < n; ++j) dst[seg_of[static_cast<std::size_t>(j)]] += src[j];
  }
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, seg_of = std::move(seg_of), rows, n,
                              num_segments](Tape& t) {
      const Tensor& g = t.grad(out);
      Tensor& gx = t.grad(x);
      for (int i = 0; i < rows; ++i) {
        const double* src = g.data() + static_cast<std::size_t>(i) * num_segments;
        double* dst = gx.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) dst[j] += src[seg_of[static_cast<std::size_t>(j)]];
      }
    };
  return out;
}

Var Tape::sum_lastdim(Var x) {
  const Tensor& vx = val(x);
  int n = vx.shape(vx.dim() - 1);
  int rows = static_cast<int>(vx.size()) / n;
  std::vector<int> shape = vx.shape();
  shape.pop_back();
  if (shape.empty()) shape.push_back(1);
  Tensor y(shape);
  for (int i = 0; i < rows; ++i) {
    const double* src = vx.data() + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += src[j];
    y[static_cast<std::size_t>(i)] = s;
  }
  bool rg = requires_grad(x);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, rows, n](Tape& t) {
      const Tensor& g = t.grad(out);
      Tensor& gx = t.grad(x);
      for (int i = 0; i < rows; ++i) {
        double gv = g[static_cast<std::size_t>(i)];
        double* dst = gx.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) dst[j] += gv;
      }
    };
  return out;
}

Var Tape::mean_all(Var x) {
  const Tensor& vx = val(x);
  double s = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) s += vx[i];
  double inv = 1.0 / static_cast<double>(vx.size());
  bool rg = requires_grad(x);
  Var out = push(Tensor::scalar(s * inv), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out, inv](Tape& t) {
      double g = t.grad(out)[0] * inv;
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    };
  return out;
}

Var Tape::sum_all(Var x) {
  const Tensor& vx = val(x);
  double s = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) s += vx[i];
  bool rg = requires_grad(x);
  Var out = push(Tensor::scalar(s), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, out](Tape& t) {
      double g = t.grad(out)[0];
      Tensor& gx = t.grad(x);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    };
  return out;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& vx = val(x);
  const Tensor& vg = val(gain);
  const Tensor& vb = val(bias);
  check(vx.dim() == 2, "layer_norm: x must be a matrix");
  int rows = vx.shape(0), cols = vx.shape(1);
  check(static_cast<int>(vg.size()) == cols && static_cast<int>(vb.size()) == cols,
        "layer_norm: gain/bias width mismatch");

  Tensor y(rows, cols);
  kernels::layer_norm_rows(vx.data(), vg.data(), vb.data(), y.data(), rows, cols, eps);
  bool rg = requires_grad(x) || requires_grad(gain) || requires_grad(bias);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [x, gain, bias, out, rows, cols, eps](Tape& t) {
      const Tensor& g = t.grad(out);
      const Tensor& vx2 = t.val(x);
      const Tensor& vg2 = t.val(gain);
      bool need_x = t.requires_grad(x);
      bool need_g = t.requires_grad(gain);
      bool need_b = t.requires_grad(bias);
      Tensor* GX = need_x ? &t.grad(x) : nullptr;
      Tensor* GG = need_g ? &t.grad(gain) : nullptr;
      Tensor* GB = need_b ? &t.grad(bias) : nullptr;
      std::vector<double> xhat(static_cast<std::size_t>(cols));
      for (int i = 0; i < rows; ++i) {
        const double* xr = vx2.row_ptr(i);
        const double* gr = g.row_ptr(i);
        double mean = 0.0;
        for (int j = 0; j < cols; ++j) mean += xr[j];
        mean /= cols;
        double var = 0.0;
        for (int j = 0; j < cols; ++j) {
          double d = xr[j] - mean;
          var += d * d;
        }
        var /= cols;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < cols; ++j) xhat[static_cast<std::size_t>(j)] = (xr[j] - mean) * inv;
        if (need_g)
          for (int j = 0; j < cols; ++j)
            (*GG)[static_cast<std::size_t>(j)] += gr[j] * xhat[static_cast<std::size_t>(j)];
        if (need_b)
          for (int j = 0; j < cols; ++j) (*GB)[static_cast<std::size_t>(j)] += gr[j];
        if (need_x) {
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int j = 0; j < cols; ++j) {
            double dxh = gr[j] * vg2[static_cast<std::size_t>(j)];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat[static_cast<std::size_t>(j)];
          }
          double* ox = GX->row_ptr(i);
          for (int j = 0; j < cols; ++j) {
            double dxh = gr[j] * vg2[static_cast<std::size_t>(j)];
            ox[j] += inv * (dxh - (sum_dxhat + xhat[static_cast<std::size_t>(j)] * sum_dxhat_xhat) /
                                      cols);
          }
        }
      }
    };
  return out;
}

Var Tape::embed_rows(Var table, std::vector<int> ids) {
  const Tensor& vt = val(table);
  check(vt.dim() == 2, "embed_rows: table must be a matrix");
  int cols = vt.shape(1);
  Tensor y(static_cast<int>(ids.size()), cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double* src = vt.row_ptr(ids[i]);
    double* dst = y.row_ptr(static_cast<int>(i));
    for (int j = 0; j < cols; ++j) dst[j] = src[j];
  }
  bool rg = requires_grad(table);
  Var out = push(std::move(y), rg, nullptr);
  if (rg)
    nodes_.back().backward = [table, out, ids = std::move(ids), cols](Tape& t) {
      const Tensor& g = t.grad(out);
      Tensor& gt = t.grad(table);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        double* dst = gt.row_ptr(ids[i]);
        const double* src = g.row_ptr(static_cast<int>(i));
        for (int j = 0; j < cols; ++j) dst[j] += src[j];
      }
    };
  return out;
}

Var Tape::xent_logits(Var logits, std::vector<int> targets, int ignore_index) {
  const Tensor& vl = val(logits);
  check(vl.dim() == 2, "xent: logits must be [M,V]");
  int m = vl.shape(0), v = vl.shape(1);
  check(static_cast<int>(targets.size()) == m, "xent: target count mismatch");

  // keep the softmax for the backward pass
  Tensor probs = vl;
  kernels::softmax_rows(probs.data(), m, v);
  double loss = 0.0;
  int counted = 0;
  for (int i = 0; i < m; ++i) {
    int y = targets[static_cast<std::size_t>(i)];
    if (y == ignore_index) continue;
    check(y >= 0 && y < v, "xent: target out of range");
    const double* lr = vl.row_ptr(i);
    double mx = lr[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, lr[j]);
    double z = 0.0;
    for (int j = 0; j < v; ++j) z += std::exp(lr[j] - mx);
    loss += std::log(z) + mx - lr[y];
    ++counted;
  }
  check(counted > 0, "xent: no counted positions");
  loss /= counted;

  bool rg = requires_grad(logits);
  Var out = push(Tensor::scalar(loss), rg, nullptr);
  if (rg)
    nodes_.back().backward = [logits, out, targets = std::move(targets), ignore_index,
                              probs = std::move(probs), m, v, counted](Tape& t) {
      double g = t.grad(out)[0] / counted;
      Tensor& gl = t.grad(logits);
      for (int i = 0; i < m; ++i) {
        int y = targets[static_cast<std::size_t>(i)];
        if (y == ignore_index) continue;
        const double* pr = probs.row_ptr(i);
        double* dst = gl.row_ptr(i);
        for (int j = 0; j < v; ++j) dst[j] += g * pr[j];
        dst[y] -= g;
      }
    };
  return out;
}

}  // namespace sentattn::ad
