#pragma once

#include <torch/torch.h>

#include <string_view>

namespace segt {

// Bilinear resize of an NCHW tensor (align_corners = false).
torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width);

// Bilinear resize to the spatial size of `like`.
torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& like);

// Nearest-neighbour resize of an NCHW tensor.
torch::Tensor resize_nearest(const torch::Tensor& x, int64_t height, int64_t width);

// Throws InputError unless `x` is 4-D.
void require_nchw(const torch::Tensor& x, std::string_view what);

// Throws InputError unless `a` and `b` have identical shapes.
void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, std::string_view what);

// Fan-in scaled uniform kernel init (He-uniform bound sqrt(6 / fan_in)) with
// zero bias. Applied to every Conv2d reachable from `module`.
void init_conv_parameters(torch::nn::Module& module);

torch::nn::Conv2d conv1x1(int64_t in, int64_t out);
torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride = 1, int64_t dilation = 1);

}  // namespace segt
