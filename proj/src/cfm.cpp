#include "segt/cfm.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

#include <sstream>

namespace segt {

CascadeFusionImpl::CascadeFusionImpl(int64_t width) {
    for (std::size_t i = 0; i < 3; ++i) {
        fuse[i] = register_module("fuse" + std::to_string(i + 1), conv3x3(2 * width, width));
    }
    head = register_module("head", conv1x1(width, 1));
}

FusionOutput CascadeFusionImpl::forward(const GuidedFeatureSet& guided, const torch::Tensor& c4,
                                        int64_t output_height, int64_t output_width) {
    FusionOutput out;
    out.f[3] = c4;
    for (int i = 2; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        const auto& eg = guided.eg[idx];
        require_nchw(eg, "cascade fusion");
        auto up = resize_like(out.f[idx + 1], eg);
        if (up.size(1) != eg.size(1)) {
            std::ostringstream msg;
            msg << "cascade fusion: channel mismatch at level " << i + 1 << " (" << up.size(1) << " vs "
                << eg.size(1) << ")";
            throw InputError(msg.str());
        }
        out.f[idx] = fuse[idx]->forward(torch::cat({up * eg, eg}, 1));
    }
    auto p = out.f[0];
    for (std::size_t i = 1; i < 4; ++i) {
        p = p + resize_like(out.f[i], out.f[0]);
    }
    out.p_feature = p;
    out.p_logits = resize_bilinear(head->forward(p), output_height, output_width);
    return out;
}

FusionOutput additive_fuse(const GuidedFeatureSet& guided, torch::nn::Conv2d& head, int64_t output_height,
                           int64_t output_width) {
    FusionOutput out;
    out.f = guided.eg;
    auto p = guided.eg[0];
    for (std::size_t i = 1; i < 4; ++i) {
        p = p + resize_like(guided.eg[i], guided.eg[0]);
    }
    out.p_feature = p;
    out.p_logits = resize_bilinear(head->forward(p), output_height, output_width);
    return out;
}

torch::Tensor final_prediction(const torch::Tensor& eg1, const torch::Tensor& p_logits, torch::nn::Conv2d& eg1_head) {
    require_nchw(p_logits, "final prediction");
    return resize_like(eg1_head->forward(eg1), p_logits) + p_logits;
}

}  // namespace segt
