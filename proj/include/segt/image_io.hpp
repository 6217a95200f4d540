#pragma once

#include <torch/torch.h>

#include <filesystem>

namespace segt {

// 3×H×W float32 RGB in [0,1].
torch::Tensor read_image(const std::filesystem::path& path);

// 1×H×W float32 in {0,1}. 8-bit masks are thresholded at 128, {0,1} masks at
// 0.5. Colour masks whose channels disagree are an InputError.
torch::Tensor read_mask(const std::filesystem::path& path);

// H×W (or 1×H×W) map in [0,1] written as 8-bit grayscale PNG.
void write_gray(const std::filesystem::path& path, const torch::Tensor& map);

// 3×H×W uint8 or float [0,1] RGB written as PNG.
void write_rgb(const std::filesystem::path& path, const torch::Tensor& image);

// 3×H×W uint8 copy of `image` with the boundary of `mask` drawn in green.
torch::Tensor draw_overlay(const torch::Tensor& image, const torch::Tensor& mask);

}  // namespace segt
