#pragma once

#include <string>
#include <vector>

#include "dronedet/autodiff.hpp"
#include "dronedet/rng.hpp"
#include "dronedet/tensor.hpp"

namespace dronedet {

// Named, ordered parameter registry. Registration order is the layout order
// inside checkpoints, so it must be deterministic for a given model config.
class ParamStore {
public:
    int add(const std::string& name, Tensor value);
    int find(const std::string& name) const; // -1 when missing
    int size() const { return static_cast<int>(values_.size()); }
    int64_t total_params() const;

    const std::string& name(int idx) const { return names_[static_cast<size_t>(idx)]; }
    Tensor& value(int idx) { return values_[static_cast<size_t>(idx)]; }
    const Tensor& value(int idx) const { return values_[static_cast<size_t>(idx)]; }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

// Per-forward view of the store: lazily wraps parameters as graph leaves so
// one registration works for both training and grad-free inference.
class ParamBank {
public:
    ParamBank(ad::Graph& g, const ParamStore& store, bool requires_grad)
        : g_(g), store_(store), rg_(requires_grad),
          vars_(static_cast<size_t>(store.size()), nullptr) {}

    ad::Var operator[](int idx) {
        auto& slot = vars_[static_cast<size_t>(idx)];
        if (!slot) slot = g_.leaf(store_.value(idx), rg_);
        return slot;
    }

    // Gradient of parameter idx after backward(); zero tensor when untouched.
    Tensor grad_of(int idx) const {
        const auto& slot = vars_[static_cast<size_t>(idx)];
        if (slot && slot->requires_grad) return slot->grad;
        return Tensor::zeros(store_.value(idx).shape);
    }

private:
    ad::Graph& g_;
    const ParamStore& store_;
    bool rg_;
    std::vector<ad::Var> vars_;
};

Tensor kaiming_conv_init(int cout, int cin, int kh, int kw, Rng& rng);
Tensor xavier_linear_init(int cin, int cout, Rng& rng);

} // namespace dronedet
