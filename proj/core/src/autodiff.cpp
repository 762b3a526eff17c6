#include "dronedet/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace dronedet::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using MapC = Eigen::Map<const RowMat>;

bool any_rg(std::initializer_list<Var> parents) {
    for (Var p : parents)
        if (p->requires_grad) return true;
    return false;
}

} // namespace

Var Graph::leaf(Tensor value, bool requires_grad) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.val = std::move(value);
    n.requires_grad = requires_grad && grad_enabled_;
    if (n.requires_grad) n.grad = Tensor::zeros(n.val.shape);
    return &n;
}

Var Graph::node(Tensor value, std::initializer_list<Var> parents) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.val = std::move(value);
    n.requires_grad = grad_enabled_ && any_rg(parents);
    if (n.requires_grad) n.grad = Tensor::zeros(n.val.shape);
    return &n;
}

void Graph::backward(Var root) {
    check(grad_enabled_, "backward() on a grad-disabled graph");
    check(root->val.numel() == 1, "backward root must be scalar");
    check(root->requires_grad, "backward root does not depend on any parameter");
    root->grad.v[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->requires_grad && it->back) it->back();
    }
}

// ---------------- elementwise ----------------

Var add(Graph& g, Var a, Var b) {
    check(a->val.same_shape(b->val), "add: shape mismatch " + shape_str(a->val.shape) + " vs " +
                                         shape_str(b->val.shape));
    Tensor out = a->val;
    axpy(out, b->val);
    Var r = g.node(std::move(out), {a, b});
    if (r->requires_grad) r->back = [r, a, b] {
        if (a->requires_grad) axpy(a->grad, r->grad);
        if (b->requires_grad) axpy(b->grad, r->grad);
    };
    return r;
}

Var sub(Graph& g, Var a, Var b) {
    check(a->val.same_shape(b->val), "sub: shape mismatch");
    Tensor out = a->val;
    axpy(out, b->val, -1.0);
    Var r = g.node(std::move(out), {a, b});
    if (r->requires_grad) r->back = [r, a, b] {
        if (a->requires_grad) axpy(a->grad, r->grad);
        if (b->requires_grad) axpy(b->grad, r->grad, -1.0);
    };
    return r;
}

Var mul(Graph& g, Var a, Var b) {
    check(a->val.same_shape(b->val), "mul: shape mismatch");
    Tensor out = a->val;
    const size_t n = out.v.size();
    for (size_t i = 0; i < n; ++i) out.v[i] *= b->val.v[i];
    Var r = g.node(std::move(out), {a, b});
    if (r->requires_grad) r->back = [r, a, b] {
        const size_t m = r->grad.v.size();
        if (a->requires_grad)
            for (size_t i = 0; i < m; ++i) a->grad.v[i] += r->grad.v[i] * b->val.v[i];
        if (b->requires_grad)
            for (size_t i = 0; i < m; ++i) b->grad.v[i] += r->grad.v[i] * a->val.v[i];
    };
    return r;
}

Var scale(Graph& g, Var a, double c) {
    Tensor out = a->val;
    for (double& x : out.v) x *= c;
    Var r = g.node(std::move(out), {a});
    if (r->requires_grad) r->back = [r, a, c] { axpy(a->grad, r->grad, c); };
    return r;
}

Var sigmoid(Graph& g, Var a) {
    Tensor out = a->val;
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    Var r = g.node(std::move(out), {a});
    if (r->requires_grad) r->back = [r, a] {
        const size_t n = r->grad.v.size();
        for (size_t i = 0; i < n; ++i) {
            const double y = r->val.v[i];
            a->grad.v[i] += r->grad.v[i] * y * (1.0 - y);
        }
    };
    return r;
}

Var silu(Graph& g, Var a) {
    Tensor out = a->val;
    for (double& x : out.v) x = x / (1.0 + std::exp(-x));
    Var r = g.node(std::move(out), {a});
    if (r->requires_grad) r->back = [r, a] {
        const size_t n = r->grad.v.size();
        for (size_t i = 0; i < n; ++i) {
            const double x = a->val.v[i];
            const double s = 1.0 / (1.0 + std::exp(-x));
            a->grad.v[i] += r->grad.v[i] * s * (1.0 + x * (1.0 - s));
        }
    };
    return r;
}

Var leaky_relu(Graph& g, Var a, double slope) {
    Tensor out = a->val;
    for (double& x : out.v)
        if (x < 0) x *= slope;
    Var r = g.node(std::move(out), {a});
    if (r->requires_grad) r->back = [r, a, slope] {
        const size_t n = r->grad.v.size();
        for (size_t i = 0; i < n; ++i)
            a->grad.v[i] += r->grad.v[i] * (a->val.v[i] >= 0 ? 1.0 : slope);
    };
    return r;
}

Var exp_clamp(Graph& g, Var a, double lo, double hi) {
    check(lo < hi, "exp_clamp: lo must be < hi");
    Tensor out = a->val;
    for (double& x : out.v) x = std::exp(std::clamp(x, lo, hi));
    Var r = g.node(std::move(out), {a});
    if (r->requires_grad) r->back = [r, a, lo, hi] {
        const size_t n = r->grad.v.size();
        for (size_t i = 0; i < n; ++i) {
            const double x = a->val.v[i];
            if (x > lo && x < hi) a->grad.v[i] += r->grad.v[i] * r->val.v[i];
        }
    };
    return r;
}

// ---------------- linear algebra ----------------

Var matmul(Graph& g, Var a, Var b) {
    check(a->val.ndim() == 2 && b->val.ndim() == 2 && a->val.dim(1) == b->val.dim(0),
          "matmul: incompatible shapes " + shape_str(a->val.shape) + " x " + shape_str(b->val.shape));
    const int m = a->val.dim(0), k = a->val.dim(1), n = b->val.dim(1);
    Tensor out = Tensor::zeros({m, n});
    MapM(out.v.data(), m, n).noalias() =
        MapC(a->val.v.data(), m, k) * MapC(b->val.v.data(), k, n);
    Var r = g.node(std::move(out), {a, b});
    if (r->requires_grad) r->back = [r, a, b, m, k, n] {
        MapC go(r->grad.v.data(), m, n);
        if (a->requires_grad)
            MapM(a->grad.v.data(), m, k).noalias() += go * MapC(b->val.v.data(), k, n).transpose();
        if (b->requires_grad)
            MapM(b->grad.v.data(), k, n).noalias() += MapC(a->val.v.data(), m, k).transpose() * go;
    };
    return r;
}

Var add_rowvec(Graph& g, Var x, Var b) {
    check(x->val.ndim() >= 1 && b->val.ndim() == 1, "add_rowvec: expects [R,C] and [C]");
    const int c = b->val.dim(0);
    check(x->val.numel() % c == 0 && x->val.shape.back() == c, "add_rowvec: last dim mismatch");
    const int64_t rows = x->val.numel() / c;
    Tensor out = x->val;
    for (int64_t rr = 0; rr < rows; ++rr)
        for (int j = 0; j < c; ++j) out.v[static_cast<size_t>(rr) * c + j] += b->val.v[j];
    Var r = g.node(std::move(out), {x, b});
    if (r->requires_grad) r->back = [r, x, b, rows, c] {
        if (x->requires_grad) axpy(x->grad, r->grad);
        if (b->requires_grad)
            for (int64_t rr = 0; rr < rows; ++rr)
                for (int j = 0; j < c; ++j)
                    b->grad.v[j] += r->grad.v[static_cast<size_t>(rr) * c + j];
    };
    return r;
}

Var linear(Graph& g, Var x, Var w, Var b) {
    check(x->val.ndim() >= 1 && w->val.ndim() == 2, "linear: bad ranks");
    const int cin = w->val.dim(0), cout = w->val.dim(1);
    check(x->val.shape.back() == cin, "linear: input feature dim mismatch");
    const int64_t rows = x->val.numel() / cin;
    std::vector<int> out_shape = x->val.shape;
    out_shape.back() = cout;
    Tensor out = Tensor::zeros(out_shape);
    MapM om(out.v.data(), rows, cout);
    om.noalias() = MapC(x->val.v.data(), rows, cin) * MapC(w->val.v.data(), cin, cout);
    if (b) {
        check(b->val.ndim() == 1 && b->val.dim(0) == cout, "linear: bias dim mismatch");
        om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b->val.v.data(), cout);
    }
    Var r = b ? g.node(std::move(out), {x, w, b}) : g.node(std::move(out), {x, w});
    if (r->requires_grad) r->back = [r, x, w, b, rows, cin, cout] {
        MapC go(r->grad.v.data(), rows, cout);
        if (x->requires_grad)
            MapM(x->grad.v.data(), rows, cin).noalias() +=
                go * MapC(w->val.v.data(), cin, cout).transpose();
        if (w->requires_grad)
            MapM(w->grad.v.data(), cin, cout).noalias() +=
                MapC(x->val.v.data(), rows, cin).transpose() * go;
        if (b && b->requires_grad)
            Eigen::Map<Eigen::RowVectorXd>(b->grad.v.data(), cout) += go.colwise().sum();
    };
    return r;
}

Var bmm(Graph& g, Var a, Var b, bool trans_b) {
    check(a->val.ndim() == 3 && b->val.ndim() == 3, "bmm: expects rank-3 tensors");
    const int B = a->val.dim(0), m = a->val.dim(1), k = a->val.dim(2);
    check(b->val.dim(0) == B, "bmm: batch mismatch");
    const int n = trans_b ? b->val.dim(1) : b->val.dim(2);
    const int bk = trans_b ? b->val.dim(2) : b->val.dim(1);
    check(bk == k, "bmm: inner dim mismatch");
    Tensor out = Tensor::zeros({B, m, n});
    const int64_t sa = static_cast<int64_t>(m) * k;
    const int64_t sb = static_cast<int64_t>(k) * n;
    const int64_t so = static_cast<int64_t>(m) * n;
    for (int i = 0; i < B; ++i) {
        MapC am(a->val.v.data() + i * sa, m, k);
        MapM om(out.v.data() + i * so, m, n);
        if (trans_b)
            om.noalias() = am * MapC(b->val.v.data() + i * sb, n, k).transpose();
        else
            om.noalias() = am * MapC(b->val.v.data() + i * sb, k, n);
    }
    Var r = g.node(std::move(out), {a, b});
    if (r->requires_grad) r->back = [r, a, b, trans_b, B, m, k, n, sa, sb, so] {
        for (int i = 0; i < B; ++i) {
            MapC go(r->grad.v.data() + i * so, m, n);
            MapC am(a->val.v.data() + i * sa, m, k);
            if (trans_b) {
                MapC bm(b->val.v.data() + i * sb, n, k);
                if (a->requires_grad)
                    MapM(a->grad.v.data() + i * sa, m, k).noalias() += go * bm;
                if (b->requires_grad)
                    MapM(b->grad.v.data() + i * sb, n, k).noalias() += go.transpose() * am;
            } else {
                MapC bm(b->val.v.data() + i * sb, k, n);
                if (a->requires_grad)
                    MapM(a->grad.v.data() + i * sa, m, k).noalias() += go * bm.transpose();
                if (b->requires_grad)
                    MapM(b->grad.v.data() + i * sb, k, n).noalias() += am.transpose() * go;
            }
        }
    };
    return r;
}

// ---------------- conv / spatial ----------------

namespace {

void im2col(const double* x, int cin, int h, int w, int kh, int kw, int stride, int pad,
            int oh, int ow, double* col) {
    // col is [cin*kh*kw, oh*ow] row-major
    for (int c = 0; c < cin; ++c)
        for (int dy = 0; dy < kh; ++dy)
            for (int dx = 0; dx < kw; ++dx) {
                double* dst = col + (static_cast<int64_t>(c) * kh * kw + dy * kw + dx) *
                                        (static_cast<int64_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + dy;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + ow, 0.0);
                        dst += ow;
                        continue;
                    }
                    const double* src = x + (static_cast<int64_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + dx;
                        *dst++ = (ix >= 0 && ix < w) ? src[ix] : 0.0;
                    }
                }
            }
}

void col2im_add(const double* col, int cin, int h, int w, int kh, int kw, int stride, int pad,
                int oh, int ow, double* dx) {
    for (int c = 0; c < cin; ++c)
        for (int dy = 0; dy < kh; ++dy)
            for (int dx_ = 0; dx_ < kw; ++dx_) {
                const double* src = col + (static_cast<int64_t>(c) * kh * kw + dy * kw + dx_) *
                                              (static_cast<int64_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + dy;
                    if (iy < 0 || iy >= h) {
                        src += ow;
                        continue;
                    }
                    double* dstrow = dx + (static_cast<int64_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + dx_;
                        if (ix >= 0 && ix < w) dstrow[ix] += *src;
                        ++src;
                    }
                }
            }
}

} // namespace

Var conv2d(Graph& g, Var x, Var w, Var b, int stride, int pad) {
    check(x->val.ndim() == 4 && w->val.ndim() == 4, "conv2d: expects [N,C,H,W] and [Co,Ci,kh,kw]");
    const int N = x->val.dim(0), cin = x->val.dim(1), h = x->val.dim(2), ww = x->val.dim(3);
    const int cout = w->val.dim(0), kh = w->val.dim(2), kw = w->val.dim(3);
    check(w->val.dim(1) == cin, "conv2d: channel mismatch");
    check(stride >= 1, "conv2d: stride must be >= 1");
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (ww + 2 * pad - kw) / stride + 1;
    check(oh > 0 && ow > 0, "conv2d: output would be empty");
    const int K = cin * kh * kw;
    const int64_t ohw = static_cast<int64_t>(oh) * ow;

    Tensor out = Tensor::zeros({N, cout, oh, ow});
    auto cols = std::make_shared<Tensor>(Tensor::zeros({N, K, static_cast<int>(ohw)}));
    for (int i = 0; i < N; ++i) {
        double* col = cols->v.data() + static_cast<int64_t>(i) * K * ohw;
        im2col(x->val.v.data() + static_cast<int64_t>(i) * cin * h * ww, cin, h, ww, kh, kw,
               stride, pad, oh, ow, col);
        MapM om(out.v.data() + static_cast<int64_t>(i) * cout * ohw, cout, ohw);
        om.noalias() = MapC(w->val.v.data(), cout, K) * MapC(col, K, ohw);
        if (b) {
            check(b->val.dim(0) == cout, "conv2d: bias dim mismatch");
            om.colwise() += Eigen::Map<const Eigen::VectorXd>(b->val.v.data(), cout);
        }
    }
    Var r = b ? g.node(std::move(out), {x, w, b}) : g.node(std::move(out), {x, w});
    if (r->requires_grad) {
        r->back = [r, x, w, b, cols, N, cin, h, ww, cout, kh, kw, stride, pad, oh, ow, K, ohw] {
            std::vector<double> dcol(static_cast<size_t>(K) * ohw);
            for (int i = 0; i < N; ++i) {
                MapC go(r->grad.v.data() + static_cast<int64_t>(i) * cout * ohw, cout, ohw);
                const double* col = cols->v.data() + static_cast<int64_t>(i) * K * ohw;
                if (w->requires_grad)
                    MapM(w->grad.v.data(), cout, K).noalias() += go * MapC(col, K, ohw).transpose();
                if (b && b->requires_grad)
                    Eigen::Map<Eigen::VectorXd>(b->grad.v.data(), cout) += go.rowwise().sum();
                if (x->requires_grad) {
                    MapM(dcol.data(), K, ohw).noalias() =
                        MapC(w->val.v.data(), cout, K).transpose() * go;
                    col2im_add(dcol.data(), cin, h, ww, kh, kw, stride, pad, oh, ow,
                               x->grad.v.data() + static_cast<int64_t>(i) * cin * h * ww);
                }
            }
        };
    }
    return r;
}

Var maxpool_same(Graph& g, Var x, int k) {
    check(x->val.ndim() == 4, "maxpool_same: expects [N,C,H,W]");
    check(k >= 1 && k % 2 == 1, "maxpool_same: kernel must be odd");
    const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
    const int r2 = k / 2;
    Tensor out = Tensor::zeros(x->val.shape);
    auto argmax = std::make_shared<std::vector<int64_t>>(x->val.v.size());
    // separable max filter: horizontal pass then vertical pass
    std::vector<double> rowv(static_cast<size_t>(H) * W);
    std::vector<int> rowa(static_cast<size_t>(H) * W);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const int64_t base = (static_cast<int64_t>(n) * C + c) * H * W;
            const double* src = x->val.v.data() + base;
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx < W; ++xx) {
                    const int lo = std::max(0, xx - r2), hi = std::min(W - 1, xx + r2);
                    double best = src[y * W + lo];
                    int bi = lo;
                    for (int t = lo + 1; t <= hi; ++t)
                        if (src[y * W + t] > best) {
                            best = src[y * W + t];
                            bi = t;
                        }
                    rowv[static_cast<size_t>(y) * W + xx] = best;
                    rowa[static_cast<size_t>(y) * W + xx] = bi;
                }
            double* dst = out.v.data() + base;
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx < W; ++xx) {
                    const int lo = std::max(0, y - r2), hi = std::min(H - 1, y + r2);
                    double best = rowv[static_cast<size_t>(lo) * W + xx];
                    int by = lo;
                    for (int t = lo + 1; t <= hi; ++t)
                        if (rowv[static_cast<size_t>(t) * W + xx] > best) {
                            best = rowv[static_cast<size_t>(t) * W + xx];
                            by = t;
                        }
                    dst[y * W + xx] = best;
                    (*argmax)[static_cast<size_t>(base) + y * W + xx] =
                        base + static_cast<int64_t>(by) * W + rowa[static_cast<size_t>(by) * W + xx];
                }
        }
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x, argmax] {
        const size_t n = r->grad.v.size();
        for (size_t i = 0; i < n; ++i) x->grad.v[(*argmax)[i]] += r->grad.v[i];
    };
    return r;
}

Var upsample2x(Graph& g, Var x) {
    check(x->val.ndim() == 4, "upsample2x: expects [N,C,H,W]");
    const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
    Tensor out = Tensor::zeros({N, C, 2 * H, 2 * W});
    for (int nc = 0; nc < N * C; ++nc) {
        const double* src = x->val.v.data() + static_cast<int64_t>(nc) * H * W;
        double* dst = out.v.data() + static_cast<int64_t>(nc) * 4 * H * W;
        for (int y = 0; y < 2 * H; ++y)
            for (int xx = 0; xx < 2 * W; ++xx)
                dst[y * 2 * W + xx] = src[(y / 2) * W + xx / 2];
    }
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x, N, C, H, W] {
        for (int nc = 0; nc < N * C; ++nc) {
            double* dx = x->grad.v.data() + static_cast<int64_t>(nc) * H * W;
            const double* go = r->grad.v.data() + static_cast<int64_t>(nc) * 4 * H * W;
            for (int y = 0; y < 2 * H; ++y)
                for (int xx = 0; xx < 2 * W; ++xx) dx[(y / 2) * W + xx / 2] += go[y * 2 * W + xx];
        }
    };
    return r;
}

Var concat_ch(Graph& g, const std::vector<Var>& xs) {
    check(!xs.empty(), "concat_ch: empty input list");
    const int N = xs[0]->val.dim(0), H = xs[0]->val.dim(2), W = xs[0]->val.dim(3);
    int ctot = 0;
    for (Var v : xs) {
        check(v->val.ndim() == 4 && v->val.dim(0) == N && v->val.dim(2) == H && v->val.dim(3) == W,
              "concat_ch: shape mismatch");
        ctot += v->val.dim(1);
    }
    Tensor out = Tensor::zeros({N, ctot, H, W});
    const int64_t hw = static_cast<int64_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        int64_t off = 0;
        for (Var v : xs) {
            const int c = v->val.dim(1);
            std::copy_n(v->val.v.data() + static_cast<int64_t>(n) * c * hw, c * hw,
                        out.v.data() + (static_cast<int64_t>(n) * ctot + off) * hw);
            off += c;
        }
    }
    // variadic parents: register via node() with first two, keep all in closure
    Var r = g.node(std::move(out), {});
    bool rg = false;
    for (Var v : xs) rg = rg || v->requires_grad;
    r->requires_grad = rg && g.grad_enabled();
    if (r->requires_grad) {
        r->grad = Tensor::zeros(r->val.shape);
        std::vector<Var> parents = xs;
        r->back = [r, parents, N, ctot, hw] {
            for (int n = 0; n < N; ++n) {
                int64_t off = 0;
                for (Var v : parents) {
                    const int c = v->val.dim(1);
                    if (v->requires_grad) {
                        const double* src = r->grad.v.data() + (static_cast<int64_t>(n) * ctot + off) * hw;
                        double* dst = v->grad.v.data() + static_cast<int64_t>(n) * c * hw;
                        for (int64_t i = 0; i < c * hw; ++i) dst[i] += src[i];
                    }
                    off += c;
                }
            }
        };
    }
    return r;
}

Var pad2d(Graph& g, Var x, int top, int bottom, int left, int right) {
    check(x->val.ndim() == 4, "pad2d: expects [N,C,H,W]");
    check(top >= 0 && bottom >= 0 && left >= 0 && right >= 0, "pad2d: negative padding");
    const int N = x->val.dim(0), C = x->val.dim(1), H = x->val.dim(2), W = x->val.dim(3);
    const int OH = H + top + bottom, OW = W + left + right;
    Tensor out = Tensor::zeros({N, C, OH, OW});
    for (int nc = 0; nc < N * C; ++nc) {
        const double* src = x->val.v.data() + static_cast<int64_t>(nc) * H * W;
        double* dst = out.v.data() + static_cast<int64_t>(nc) * OH * OW;
        for (int y = 0; y < H; ++y)
            std::copy_n(src + static_cast<int64_t>(y) * W, W,
                        dst + static_cast<int64_t>(y + top) * OW + left);
    }
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x, N, C, H, W, OH, OW, top, left] {
        for (int nc = 0; nc < N * C; ++nc) {
            double* dx = x->grad.v.data() + static_cast<int64_t>(nc) * H * W;
            const double* go = r->grad.v.data() + static_cast<int64_t>(nc) * OH * OW;
            for (int y = 0; y < H; ++y)
                for (int xx = 0; xx < W; ++xx)
                    dx[y * W + xx] += go[(y + top) * OW + xx + left];
        }
    };
    return r;
}

// ---------------- shape / indexing ----------------

Var reshape(Graph& g, Var x, std::vector<int> shape) {
    check(numel_of(shape) == x->val.numel(), "reshape: element count mismatch");
    Tensor out(std::move(shape), x->val.v);
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x] { axpy(x->grad, r->grad); };
    return r;
}

Var gather(Graph& g, Var x, std::shared_ptr<const std::vector<int64_t>> idx,
           std::vector<int> out_shape) {
    check(static_cast<int64_t>(idx->size()) == numel_of(out_shape),
          "gather: index count does not match output shape");
    Tensor out = Tensor::zeros(out_shape);
    const size_t n = idx->size();
    for (size_t i = 0; i < n; ++i) out.v[i] = x->val.v[static_cast<size_t>((*idx)[i])];
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x, idx] {
        const size_t m = idx->size();
        for (size_t i = 0; i < m; ++i)
            x->grad.v[static_cast<size_t>((*idx)[i])] += r->grad.v[i];
    };
    return r;
}

// ---------------- normalization / attention ----------------

Var layernorm(Graph& g, Var x, Var gamma, Var beta, double eps) {
    const int C = x->val.shape.back();
    check(gamma->val.numel() == C && beta->val.numel() == C, "layernorm: affine dim mismatch");
    const int64_t R = x->val.numel() / C;
    Tensor out = Tensor::zeros(x->val.shape);
    auto xhat = std::make_shared<std::vector<double>>(x->val.v.size());
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(R));
    for (int64_t rr = 0; rr < R; ++rr) {
        const double* xr = x->val.v.data() + rr * C;
        double mu = 0;
        for (int j = 0; j < C; ++j) mu += xr[j];
        mu /= C;
        double var = 0;
        for (int j = 0; j < C; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= C;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(rr)] = is;
        for (int j = 0; j < C; ++j) {
            const double xh = (xr[j] - mu) * is;
            (*xhat)[static_cast<size_t>(rr * C + j)] = xh;
            out.v[static_cast<size_t>(rr * C + j)] = gamma->val.v[j] * xh + beta->val.v[j];
        }
    }
    Var r = g.node(std::move(out), {x, gamma, beta});
    if (r->requires_grad) r->back = [r, x, gamma, beta, xhat, inv_std, R, C] {
        for (int64_t rr = 0; rr < R; ++rr) {
            const double* go = r->grad.v.data() + rr * C;
            const double* xh = xhat->data() + rr * C;
            const double is = (*inv_std)[static_cast<size_t>(rr)];
            double sum_dxhat = 0, sum_dxhat_xhat = 0;
            for (int j = 0; j < C; ++j) {
                const double dxh = go[j] * gamma->val.v[j];
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * xh[j];
            }
            if (x->requires_grad) {
                double* dx = x->grad.v.data() + rr * C;
                for (int j = 0; j < C; ++j) {
                    const double dxh = go[j] * gamma->val.v[j];
                    dx[j] += is * (dxh - sum_dxhat / C - xh[j] * sum_dxhat_xhat / C);
                }
            }
            if (gamma->requires_grad)
                for (int j = 0; j < C; ++j) gamma->grad.v[j] += go[j] * xh[j];
            if (beta->requires_grad)
                for (int j = 0; j < C; ++j) beta->grad.v[j] += go[j];
        }
    };
    return r;
}

Var softmax_rows(Graph& g, Var x) {
    const int n = x->val.shape.back();
    const int64_t R = x->val.numel() / n;
    Tensor out = Tensor::zeros(x->val.shape);
    for (int64_t rr = 0; rr < R; ++rr) {
        const double* xr = x->val.v.data() + rr * n;
        double* yr = out.v.data() + rr * n;
        double mx = xr[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
        double z = 0;
        for (int j = 0; j < n; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            z += yr[j];
        }
        const double iz = 1.0 / z;
        for (int j = 0; j < n; ++j) yr[j] *= iz;
    }
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x, R, n] {
        for (int64_t rr = 0; rr < R; ++rr) {
            const double* y = r->val.v.data() + rr * n;
            const double* go = r->grad.v.data() + rr * n;
            double dot = 0;
            for (int j = 0; j < n; ++j) dot += go[j] * y[j];
            double* dx = x->grad.v.data() + rr * n;
            for (int j = 0; j < n; ++j) dx[j] += y[j] * (go[j] - dot);
        }
    };
    return r;
}

// ---------------- reductions ----------------

Var reduce_sum(Graph& g, Var x) {
    double s = 0;
    for (double v : x->val.v) s += v;
    Tensor out({1}, {s});
    Var r = g.node(std::move(out), {x});
    if (r->requires_grad) r->back = [r, x] {
        const double go = r->grad.v[0];
        for (double& d : x->grad.v) d += go;
    };
    return r;
}

} // namespace dronedet::ad
