#pragma once

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <memory>

namespace segt {

/// Four encoder levels at strides 4/8/16/32 (NCHW).
struct FeaturePyramid {
    torch::Tensor en1;
    torch::Tensor en2;
    torch::Tensor en3;
    torch::Tensor en4;

    [[nodiscard]] const torch::Tensor& level(int i) const;
};

/// Backbone contract: image batch (B×3×H×W, H and W multiples of 32) to a
/// FeaturePyramid. Parameters are enumerated through torch::nn::Module.
class Backbone : public torch::nn::Module {
public:
    virtual FeaturePyramid encode(const torch::Tensor& images) = 0;
    [[nodiscard]] virtual std::array<int64_t, 4> channels() const = 0;
};

/// Runs the backbone after checking the input size, then verifies the stride
/// and channel invariants of the result.
FeaturePyramid encode(Backbone& backbone, const torch::Tensor& images);

/// Small convolutional pyramid for CPU-scale work.
///
/// A stride-4 stem opens stage 1; stages 2-4 open with a stride-2 conv.
/// Every stage then applies two 3×3 convs, each followed by GELU.
class ToyBackboneImpl : public Backbone {
public:
    explicit ToyBackboneImpl(std::array<int64_t, 4> widths = {16, 32, 64, 128});

    FeaturePyramid encode(const torch::Tensor& images) override;
    [[nodiscard]] std::array<int64_t, 4> channels() const override { return widths_; }

private:
    std::array<int64_t, 4> widths_;
    std::array<torch::nn::Conv2d, 4> down_{nullptr, nullptr, nullptr, nullptr};
    std::array<torch::nn::Conv2d, 4> conv_a_{nullptr, nullptr, nullptr, nullptr};
    std::array<torch::nn::Conv2d, 4> conv_b_{nullptr, nullptr, nullptr, nullptr};
};

/// Pretrained pyramid backbone loaded from a TorchScript file whose forward
/// returns a tuple (or list) of four tensors. Its parameters are re-registered
/// here so optimizer and checkpoint code see them like any other module's.
class ScriptedBackboneImpl : public Backbone {
public:
    explicit ScriptedBackboneImpl(const std::filesystem::path& path);
    ~ScriptedBackboneImpl() override;

    FeaturePyramid encode(const torch::Tensor& images) override;
    [[nodiscard]] std::array<int64_t, 4> channels() const override { return widths_; }

private:
    struct Scripted;
    std::unique_ptr<Scripted> scripted_;
    std::array<int64_t, 4> widths_{};
};

}  // namespace segt
