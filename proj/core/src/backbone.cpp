#include "dronedet/backbone.hpp"

#include <cmath>

namespace dronedet {

int ParamStore::add(const std::string& name, Tensor value) {
    check(find(name) < 0, "duplicate parameter name '" + name + "'");
    names_.push_back(name);
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const Tensor& t : values_) n += t.numel();
    return n;
}

Tensor kaiming_conv_init(int cout, int cin, int kh, int kw, Rng& rng) {
    Tensor t = Tensor::zeros({cout, cin, kh, kw});
    const double std = std::sqrt(2.0 / (static_cast<double>(cin) * kh * kw));
    for (double& v : t.v) v = rng.normal(0.0, std);
    return t;
}

Tensor xavier_linear_init(int cin, int cout, Rng& rng) {
    Tensor t = Tensor::zeros({cin, cout});
    const double lim = std::sqrt(6.0 / (cin + cout));
    for (double& v : t.v) v = rng.uniform(-lim, lim);
    return t;
}

void validate(const BackboneConfig& cfg) {
    check(cfg.stem_channels >= 1, "backbone: stem_channels must be >= 1");
    for (int c : cfg.stage_channels) check(c >= 2, "backbone: stage widths must be >= 2");
    check(!cfg.spp_kernels.empty(), "backbone: spp_kernels must be nonempty");
    for (int k : cfg.spp_kernels) check(k >= 1 && k % 2 == 1, "backbone: spp kernels must be odd");
    check(cfg.activation == "silu" || cfg.activation == "relu" || cfg.activation == "leaky_relu",
          "backbone: unknown activation '" + cfg.activation + "'");
}

ad::Var spp_concat(ad::Graph& g, ad::Var x, const std::vector<int>& kernels) {
    std::vector<ad::Var> branches{x};
    for (int k : kernels) branches.push_back(ad::maxpool_same(g, x, k));
    return ad::concat_ch(g, branches);
}

Backbone::Conv Backbone::make_conv(ParamStore& store, Rng& rng, const std::string& name, int cin,
                                   int cout, int k, int stride, bool act) {
    Conv cv;
    cv.w = store.add(name + ".w", kaiming_conv_init(cout, cin, k, k, rng));
    cv.b = store.add(name + ".b", Tensor::zeros({cout}));
    cv.stride = stride;
    cv.pad = k / 2;
    cv.act = act;
    return cv;
}

Backbone::Csp Backbone::make_csp(ParamStore& store, Rng& rng, const std::string& name, int c) {
    Csp b;
    const int half = c / 2;
    b.split_a = make_conv(store, rng, name + ".a", c, half, 1, 1);
    b.split_b = make_conv(store, rng, name + ".b", c, half, 1, 1);
    b.mid = make_conv(store, rng, name + ".mid", half, half, 3, 1);
    b.fuse = make_conv(store, rng, name + ".fuse", 2 * half, c, 1, 1);
    return b;
}

Backbone::Backbone(const BackboneConfig& cfg, ParamStore& store, Rng& init_rng) : cfg_(cfg) {
    validate(cfg);
    const int c1 = cfg.stem_channels;
    const auto& s = cfg.stage_channels;
    stem_ = make_conv(store, init_rng, "backbone.stem", 3, c1, 3, 2);
    down1_ = make_conv(store, init_rng, "backbone.down1", c1, s[0], 3, 2);
    csp1_ = make_csp(store, init_rng, "backbone.csp1", s[0]);
    down2_ = make_conv(store, init_rng, "backbone.down2", s[0], s[1], 3, 2);
    csp2_ = make_csp(store, init_rng, "backbone.csp2", s[1]);
    down3_ = make_conv(store, init_rng, "backbone.down3", s[1], s[2], 3, 2);
    csp3_ = make_csp(store, init_rng, "backbone.csp3", s[2]);
    down4_ = make_conv(store, init_rng, "backbone.down4", s[2], s[3], 3, 2);
    csp4_ = make_csp(store, init_rng, "backbone.csp4", s[3]);
    const int spp_in = s[3] * (1 + static_cast<int>(cfg.spp_kernels.size()));
    spp_fuse_ = make_conv(store, init_rng, "backbone.spp_fuse", spp_in, s[3], 1, 1);
}

ad::Var Backbone::run_conv(ad::Graph& g, ParamBank& params, const Conv& cv, ad::Var x) const {
    ad::Var y = ad::conv2d(g, x, params[cv.w], params[cv.b], cv.stride, cv.pad);
    if (!cv.act) return y;
    if (cfg_.activation == "silu") return ad::silu(g, y);
    if (cfg_.activation == "relu") return ad::leaky_relu(g, y, 0.0);
    return ad::leaky_relu(g, y, 0.1);
}

ad::Var Backbone::run_csp(ad::Graph& g, ParamBank& params, const Csp& b, ad::Var x) const {
    ad::Var a = run_conv(g, params, b.split_a, x);
    ad::Var skip = run_conv(g, params, b.split_b, x);
    ad::Var mid = run_conv(g, params, b.mid, a);
    ad::Var cat = ad::concat_ch(g, {mid, skip});
    return run_conv(g, params, b.fuse, cat);
}

FeaturePyramid Backbone::extract(ad::Graph& g, ParamBank& params, ad::Var x) const {
    check(x->val.ndim() == 4 && x->val.dim(1) == 3, "backbone: input must be [N,3,H,W]");
    const int h = x->val.dim(2), w = x->val.dim(3);
    if (h % 32 != 0 || w % 32 != 0) {
        throw Error("backbone: input " + std::to_string(w) + "x" + std::to_string(h) +
                    " not divisible by 32; pad to " + std::to_string((w + 31) / 32 * 32) + "x" +
                    std::to_string((h + 31) / 32 * 32) + " upstream");
    }
    ad::Var y = run_conv(g, params, stem_, x);
    y = run_conv(g, params, down1_, y);
    y = run_csp(g, params, csp1_, y);
    FeaturePyramid fp;
    y = run_conv(g, params, down2_, y);
    y = run_csp(g, params, csp2_, y);
    fp.p3 = y;
    y = run_conv(g, params, down3_, y);
    y = run_csp(g, params, csp3_, y);
    fp.p4 = y;
    y = run_conv(g, params, down4_, y);
    y = run_csp(g, params, csp4_, y);
    y = spp_concat(g, y, cfg_.spp_kernels);
    fp.p5 = run_conv(g, params, spp_fuse_, y);
    return fp;
}

} // namespace dronedet
