#pragma once

#include "segt/encoder.hpp"

#include <torch/torch.h>

#include <array>
#include <vector>

namespace segt {

/// Decoder features C_1..C_4, all of width T, at the encoder's strides.
struct DecoderFeatureSet {
    std::array<torch::Tensor, 4> c;  // c[0] is level 1 (stride 4)
};

struct CfpOptions {
    int64_t width = 32;
    std::vector<int64_t> dilations = {1, 2, 4};
    // Split mode: each branch emits width / K channels and the branches are
    // concatenated instead of summed.
    bool split_branches = false;
};

/// Multi-dilation residual refiner for one pyramid level:
/// y = p + Σ_k branch_k(p), p = Conv1×1(x).
class CfpBlockImpl : public torch::nn::Module {
public:
    CfpBlockImpl(int64_t in_channels, const CfpOptions& options);

    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d projection{nullptr};
    std::vector<torch::nn::Conv2d> branches;

private:
    bool split_ = false;
};
TORCH_MODULE(CfpBlock);

class CfpImpl : public torch::nn::Module {
public:
    CfpImpl(std::array<int64_t, 4> in_channels, const CfpOptions& options);

    DecoderFeatureSet forward(const FeaturePyramid& pyramid);

    std::array<CfpBlock, 4> levels{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(Cfp);

}  // namespace segt
