#include "segt/cfp.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

namespace segt {

CfpBlockImpl::CfpBlockImpl(int64_t in_channels, const CfpOptions& options) : split_(options.split_branches) {
    if (options.width <= 0 || options.dilations.empty()) {
        throw InputError("cfp: width must be positive and at least one dilation is required");
    }
    const auto branch_count = static_cast<int64_t>(options.dilations.size());
    if (split_ && options.width % branch_count != 0) {
        throw InputError("cfp: width " + std::to_string(options.width) + " is not divisible by " +
                         std::to_string(branch_count) + " split branches");
    }
    const auto branch_width = split_ ? options.width / branch_count : options.width;
    projection = register_module("projection", conv1x1(in_channels, options.width));
    for (std::size_t k = 0; k < options.dilations.size(); ++k) {
        const auto d = options.dilations[k];
        if (d <= 0) {
            throw InputError("cfp: dilations must be positive");
        }
        branches.push_back(register_module("branch" + std::to_string(k), conv3x3(options.width, branch_width, 1, d)));
    }
}

torch::Tensor CfpBlockImpl::forward(const torch::Tensor& x) {
    auto p = projection->forward(x);
    std::vector<torch::Tensor> outs;
    outs.reserve(branches.size());
    for (auto& b : branches) {
        outs.push_back(b->forward(p));
    }
    if (split_) {
        return p + torch::cat(outs, 1);
    }
    auto sum = outs.front();
    for (std::size_t k = 1; k < outs.size(); ++k) {
        sum = sum + outs[k];
    }
    return p + sum;
}

CfpImpl::CfpImpl(std::array<int64_t, 4> in_channels, const CfpOptions& options) {
    for (std::size_t i = 0; i < 4; ++i) {
        levels[i] = register_module("level" + std::to_string(i + 1), CfpBlock(in_channels[i], options));
    }
}

DecoderFeatureSet CfpImpl::forward(const FeaturePyramid& pyramid) {
    DecoderFeatureSet out;
    for (int i = 0; i < 4; ++i) {
        out.c[static_cast<std::size_t>(i)] = levels[static_cast<std::size_t>(i)]->forward(pyramid.level(i + 1));
    }
    return out;
}

}  // namespace segt
