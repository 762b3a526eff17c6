#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "dronedet/tensor.hpp"

namespace dronedet::ad {

struct Node {
    Tensor val;
    Tensor grad; // allocated only when requires_grad
    bool requires_grad = false;
    std::function<void()> back;
};

using Var = Node*;

// Dynamic tape. Nodes are created in topological order, so backward() is a
// single reverse sweep. With grads disabled the same op functions build a
// plain forward evaluator (no closures, no grad buffers).
class Graph {
public:
    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    Var leaf(Tensor value, bool requires_grad = false);

    // Internal: op node whose requires_grad is inherited from parents.
    Var node(Tensor value, std::initializer_list<Var> parents);

    void backward(Var root);

    size_t num_nodes() const { return nodes_.size(); }

private:
    std::deque<Node> nodes_;
    bool grad_enabled_;
};

// ---- elementwise ----
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double c);
Var sigmoid(Graph& g, Var a);
Var silu(Graph& g, Var a);
Var leaky_relu(Graph& g, Var a, double slope);
Var exp_clamp(Graph& g, Var a, double lo, double hi);

// ---- linear algebra ----
Var matmul(Graph& g, Var a, Var b);                       // [m,k] x [k,n]
Var linear(Graph& g, Var x, Var w, Var b);                // [R,Cin] x [Cin,Cout] + [Cout]
Var add_rowvec(Graph& g, Var x, Var b);                   // [R,C] + [C]
Var bmm(Graph& g, Var a, Var b, bool trans_b = false);    // [B,m,k] x [B,k,n] (or [B,n,k]^T)

// ---- conv / spatial, layout [N,C,H,W] ----
Var conv2d(Graph& g, Var x, Var w, Var b, int stride, int pad);
Var maxpool_same(Graph& g, Var x, int k);                 // stride 1, same padding, odd k
Var upsample2x(Graph& g, Var x);                          // nearest neighbor
Var concat_ch(Graph& g, const std::vector<Var>& xs);
Var pad2d(Graph& g, Var x, int top, int bottom, int left, int right);

// ---- shape / indexing ----
Var reshape(Graph& g, Var x, std::vector<int> shape);
// out.v[i] = x.v[(*idx)[i]]; indices may repeat (backward scatter-adds)
Var gather(Graph& g, Var x, std::shared_ptr<const std::vector<int64_t>> idx,
           std::vector<int> out_shape);

// ---- normalization / attention ----
Var layernorm(Graph& g, Var x, Var gamma, Var beta, double eps = 1e-5); // rows of [R,C]
Var softmax_rows(Graph& g, Var x);                        // softmax over last dim

// ---- reductions ----
Var reduce_sum(Graph& g, Var x); // -> [1]

} // namespace dronedet::ad
