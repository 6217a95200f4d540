#pragma once

#include "segt/seg.hpp"

#include <torch/torch.h>

#include <array>

namespace segt {

struct FusionOutput {
    std::array<torch::Tensor, 4> f;  // f[0] is f_1 (stride 4)
    torch::Tensor p_feature;         // Σ_i up(f_i), stride 4
    torch::Tensor p_logits;          // B×1×H×W at input resolution
};

/// Cascade fusion:
///   f_4 = C_4
///   f_i = Conv3×3(Concat(up(f_{i+1}) ⊗ EG_i, EG_i)),  i = 3, 2, 1
///   P   = Conv1×1(Σ_i up(f_i))  resized to the input resolution
class CascadeFusionImpl : public torch::nn::Module {
public:
    explicit CascadeFusionImpl(int64_t width);

    FusionOutput forward(const GuidedFeatureSet& guided, const torch::Tensor& c4, int64_t output_height,
                         int64_t output_width);

    std::array<torch::nn::Conv2d, 3> fuse{nullptr, nullptr, nullptr};  // fuse[0] produces f_1
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(CascadeFusion);

/// Fusion used when the cascade is disabled: P = Conv1×1(Σ_i up(EG_i)).
FusionOutput additive_fuse(const GuidedFeatureSet& guided, torch::nn::Conv2d& head, int64_t output_height,
                           int64_t output_width);

/// Inference map: up(Conv1×1(EG_1)) + p_logits, at the resolution of p_logits.
torch::Tensor final_prediction(const torch::Tensor& eg1, const torch::Tensor& p_logits,
                               torch::nn::Conv2d& eg1_head);

}  // namespace segt
