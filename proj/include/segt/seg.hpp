#pragma once

#include <torch/torch.h>

#include <array>

namespace segt {

/// Foreground/background streams of one decoder level.
struct StreamPair {
    torch::Tensor f_feat;      // C_i ⊗ σ(up(coarse_next))
    torch::Tensor b_feat;      // C_i ⊗ (1 − σ(up(coarse_next)))
    torch::Tensor out_coarse;  // 1-channel logits, supervised as Out_i
    torch::Tensor fg_gate;     // B×1×h×w
    torch::Tensor bg_gate;     // B×1×h×w, exactly 1 − fg_gate
};

/// Edge-guided features EG_1..EG_4 (index 0 is level 1).
struct GuidedFeatureSet {
    std::array<torch::Tensor, 4> eg;
};

/// Separator. `coarse_next` is the logit map of the next coarser level (or the
/// level-4 seed); its sigmoid, resized to `c`, gates every channel
/// of `c`. `head` maps the foreground stream to Out_i.
StreamPair separate(const torch::Tensor& c, const torch::Tensor& coarse_next, torch::nn::Conv2d& head);

/// Separator bypass: both gates are identically 1.
StreamPair separate_bypass(const torch::Tensor& c, torch::nn::Conv2d& head);

/// Channel shuffle with `groups` groups: B×(G·n)×H×W viewed as G×n, transposed
/// to n×G. shuffle(shuffle(x, G), C/G) == x.
torch::Tensor channel_shuffle(const torch::Tensor& x, int64_t groups);

/// Two-branch channel attention: a global (average-pooled) and a local
/// (per-pixel) 1×1 bottleneck, summed and squashed. Returns a B×T×H×W gate.
class ChannelAttentionImpl : public torch::nn::Module {
public:
    explicit ChannelAttentionImpl(int64_t channels, int64_t reduction = 4);

    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d global_reduce{nullptr};
    torch::nn::Conv2d global_expand{nullptr};
    torch::nn::Conv2d local_reduce{nullptr};
    torch::nn::Conv2d local_expand{nullptr};
};
TORCH_MODULE(ChannelAttention);

/// Grouped channel+spatial gating followed by a channel shuffle.
///
/// Per group: a pooled bottleneck channel gate and a 1×1 spatial gate both
/// multiply the group's features. Groups have independent parameters.
class ShuffleAttentionImpl : public torch::nn::Module {
public:
    explicit ShuffleAttentionImpl(int64_t channels, int64_t groups = 4, int64_t reduction = 2);

    torch::Tensor forward(const torch::Tensor& x);

    [[nodiscard]] int64_t groups() const { return groups_; }

    torch::nn::Conv2d channel_reduce{nullptr};
    torch::nn::Conv2d channel_expand{nullptr};
    torch::nn::Conv2d spatial{nullptr};

private:
    int64_t groups_;
    int64_t group_width_;
};
TORCH_MODULE(ShuffleAttention);

struct EdgeGuidanceOptions {
    int64_t width = 32;
    int64_t edge_width = 32;
    int64_t cam_reduction = 4;
    int64_t sam_groups = 4;
    int64_t sam_reduction = 2;
};

/// Edge-guidance block for one level:
///   w   = CAM(F + B)
///   EGF = BN_f(w ⊗ F) ⊗ E_f + E_f,        E_f = Conv3×3_f(f_e)
///   EGB = BN_b((1 − w) ⊗ B) ⊗ E_b + E_b,  E_b = Conv3×3_b(f_e)
///   EG  = SAM(EGF + EGB)
class EdgeGuidanceImpl : public torch::nn::Module {
public:
    explicit EdgeGuidanceImpl(const EdgeGuidanceOptions& options = {});

    /// `f_e` is resized to the level's spatial size before use.
    torch::Tensor forward(const StreamPair& pair, const torch::Tensor& f_e);

    ChannelAttention attention{nullptr};
    torch::nn::BatchNorm2d norm_fg{nullptr};
    torch::nn::BatchNorm2d norm_bg{nullptr};
    torch::nn::Conv2d edge_fg{nullptr};
    torch::nn::Conv2d edge_bg{nullptr};
    ShuffleAttention shuffle{nullptr};
};
TORCH_MODULE(EdgeGuidance);

}  // namespace segt
