#include "segt/seg.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

#include <algorithm>

namespace segt {

StreamPair separate(const torch::Tensor& c, const torch::Tensor& coarse_next, torch::nn::Conv2d& head) {
    require_nchw(c, "separate");
    require_nchw(coarse_next, "separate coarse map");
    if (coarse_next.size(1) != 1) {
        throw InputError("separate: the coarse map must have one channel");
    }
    auto fg = torch::sigmoid(resize_like(coarse_next, c));
    auto bg = 1.0 - fg;
    auto f = c * fg;
    auto b = c * bg;
    auto out = head->forward(f);
    return {f, b, out, fg, bg};
}

StreamPair separate_bypass(const torch::Tensor& c, torch::nn::Conv2d& head) {
    require_nchw(c, "separate");
    auto ones = torch::ones({c.size(0), 1, c.size(2), c.size(3)}, c.options());
    return {c, c, head->forward(c), ones, ones};
}

torch::Tensor channel_shuffle(const torch::Tensor& x, int64_t groups) {
    require_nchw(x, "channel_shuffle");
    const auto channels = x.size(1);
    if (groups <= 0 || channels % groups != 0) {
        throw InputError("channel_shuffle: channel count is not divisible by the group count");
    }
    if (groups == 1) {
        return x;
    }
    return x.reshape({x.size(0), groups, channels / groups, x.size(2), x.size(3)})
        .transpose(1, 2)
        .reshape(x.sizes());
}

ChannelAttentionImpl::ChannelAttentionImpl(int64_t channels, int64_t reduction) {
    if (channels < 4 || reduction <= 0 || channels / reduction < 1) {
        throw InputError("channel attention: width " + std::to_string(channels) +
                         " leaves an empty bottleneck (need at least 4 channels)");
    }
    const auto hidden = channels / reduction;
    global_reduce = register_module("global_reduce", conv1x1(channels, hidden));
    global_expand = register_module("global_expand", conv1x1(hidden, channels));
    local_reduce = register_module("local_reduce", conv1x1(channels, hidden));
    local_expand = register_module("local_expand", conv1x1(hidden, channels));
}

torch::Tensor ChannelAttentionImpl::forward(const torch::Tensor& x) {
    auto pooled = x.mean({2, 3}, /*keepdim=*/true);
    auto global = global_expand->forward(torch::gelu(global_reduce->forward(pooled)));
    auto local = local_expand->forward(torch::gelu(local_reduce->forward(x)));
    return torch::sigmoid(global + local);
}

ShuffleAttentionImpl::ShuffleAttentionImpl(int64_t channels, int64_t groups, int64_t reduction) : groups_(groups) {
    if (groups <= 0 || channels % groups != 0) {
        throw InputError("shuffle attention: width " + std::to_string(channels) + " is not divisible by " +
                         std::to_string(groups) + " groups");
    }
    if (reduction <= 0) {
        throw InputError("shuffle attention: reduction must be positive");
    }
    group_width_ = channels / groups;
    const auto hidden = std::max<int64_t>(1, group_width_ / reduction);
    channel_reduce = register_module(
        "channel_reduce", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, groups * hidden, 1).groups(groups)));
    channel_expand = register_module(
        "channel_expand", torch::nn::Conv2d(torch::nn::Conv2dOptions(groups * hidden, channels, 1).groups(groups)));
    spatial = register_module("spatial",
                              torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, groups, 1).groups(groups)));
}

torch::Tensor ShuffleAttentionImpl::forward(const torch::Tensor& x) {
    require_nchw(x, "shuffle attention");
    auto pooled = x.mean({2, 3}, /*keepdim=*/true);
    auto channel_gate = torch::sigmoid(channel_expand->forward(torch::gelu(channel_reduce->forward(pooled))));
    auto spatial_gate = torch::sigmoid(spatial->forward(x)).repeat_interleave(group_width_, 1);
    return segt::channel_shuffle(x * channel_gate * spatial_gate, groups_);
}

EdgeGuidanceImpl::EdgeGuidanceImpl(const EdgeGuidanceOptions& options) {
    attention = register_module("attention", ChannelAttention(options.width, options.cam_reduction));
    norm_fg = register_module("norm_fg", torch::nn::BatchNorm2d(options.width));
    norm_bg = register_module("norm_bg", torch::nn::BatchNorm2d(options.width));
    edge_fg = register_module("edge_fg", conv3x3(options.edge_width, options.width));
    edge_bg = register_module("edge_bg", conv3x3(options.edge_width, options.width));
    shuffle = register_module("shuffle", ShuffleAttention(options.width, options.sam_groups, options.sam_reduction));
}

torch::Tensor EdgeGuidanceImpl::forward(const StreamPair& pair, const torch::Tensor& f_e) {
    require_same_shape(pair.f_feat, pair.b_feat, "edge guidance streams");
    auto edge = resize_like(f_e, pair.f_feat);
    auto w = attention->forward(pair.f_feat + pair.b_feat);
    auto e_f = edge_fg->forward(edge);
    auto e_b = edge_bg->forward(edge);
    auto egf = norm_fg->forward(w * pair.f_feat) * e_f + e_f;
    auto egb = norm_bg->forward((1.0 - w) * pair.b_feat) * e_b + e_b;
    return shuffle->forward(egf + egb);
}

}  // namespace segt
