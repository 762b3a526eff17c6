#pragma once

#include <array>
#include <string>
#include <vector>

#include "dronedet/params.hpp"

namespace dronedet {

struct BackboneConfig {
    int stem_channels = 16;
    // channel widths at strides 4, 8 (P3), 16 (P4), 32 (P5)
    std::array<int, 4> stage_channels = {32, 64, 128, 256};
    std::vector<int> spp_kernels = {5, 9, 13};
    std::string activation = "silu"; // silu | relu | leaky_relu

    int p3_channels() const { return stage_channels[1]; }
    int p4_channels() const { return stage_channels[2]; }
    int p5_channels() const { return stage_channels[3]; }
};

void validate(const BackboneConfig& cfg);

struct FeaturePyramid {
    ad::Var p3 = nullptr; // [N, C3, H/8,  W/8]
    ad::Var p4 = nullptr; // [N, C4, H/16, W/16]
    ad::Var p5 = nullptr; // [N, C5, H/32, W/32]
};

// Identity branch plus stride-1 same-padded max-pool branches, concatenated
// along channels: C -> C * (1 + kernels.size()). Spatial dims unchanged.
ad::Var spp_concat(ad::Graph& g, ad::Var x, const std::vector<int>& kernels);

// Small cross-stage-partial feature extractor. Downsampling is done by
// strided convolutions only; the deepest stage ends in an SPP block.
// Time-independent: frames go through as batch entries.
class Backbone {
public:
    Backbone(const BackboneConfig& cfg, ParamStore& store, Rng& init_rng);

    // x: [N, 3, H, W] with H, W divisible by 32 and values in [0, 1].
    FeaturePyramid extract(ad::Graph& g, ParamBank& params, ad::Var x) const;

    const BackboneConfig& config() const { return cfg_; }

private:
    struct Conv {
        int w = -1, b = -1;
        int stride = 1, pad = 1;
        bool act = true;
    };
    struct Csp {
        Conv split_a, split_b, mid, fuse;
    };

    Conv make_conv(ParamStore& store, Rng& rng, const std::string& name, int cin, int cout, int k,
                   int stride, bool act = true);
    Csp make_csp(ParamStore& store, Rng& rng, const std::string& name, int c);

    ad::Var run_conv(ad::Graph& g, ParamBank& params, const Conv& cv, ad::Var x) const;
    ad::Var run_csp(ad::Graph& g, ParamBank& params, const Csp& b, ad::Var x) const;

    BackboneConfig cfg_;
    Conv stem_, down1_, down2_, down3_, down4_, spp_fuse_;
    Csp csp1_, csp2_, csp3_, csp4_;
};

} // namespace dronedet
