#include "segt/encoder.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

#include <torch/script.h>

#include <sstream>

namespace segt {

const torch::Tensor& FeaturePyramid::level(int i) const {
    switch (i) {
        case 1: return en1;
        case 2: return en2;
        case 3: return en3;
        case 4: return en4;
        default: throw InputError("FeaturePyramid::level: index must be 1..4");
    }
}

FeaturePyramid encode(Backbone& backbone, const torch::Tensor& images) {
    require_nchw(images, "encode");
    if (images.size(1) != 3) {
        throw InputError("encode: expected 3 input channels");
    }
    const auto h = images.size(2);
    const auto w = images.size(3);
    if (h % 32 != 0 || w % 32 != 0 || h == 0 || w == 0) {
        std::ostringstream msg;
        msg << "encode: input size " << h << "x" << w << " is not a multiple of 32";
        throw InputError(msg.str());
    }
    auto pyramid = backbone.encode(images);
    const auto widths = backbone.channels();
    int64_t previous = 0;
    for (int i = 1; i <= 4; ++i) {
        const auto& level = pyramid.level(i);
        const int64_t stride = int64_t{1} << (i + 1);
        if (!level.defined() || level.dim() != 4 || level.size(2) != h / stride || level.size(3) != w / stride ||
            level.size(1) != widths[i - 1] || level.size(0) != images.size(0)) {
            std::ostringstream msg;
            msg << "encode: backbone level " << i << " violates the stride-" << stride << " contract";
            if (level.defined()) {
                msg << " (got " << level.sizes() << ")";
            }
            throw InputError(msg.str());
        }
        if (widths[i - 1] < previous) {
            throw InputError("encode: backbone channel widths must be non-decreasing");
        }
        previous = widths[i - 1];
    }
    return pyramid;
}

ToyBackboneImpl::ToyBackboneImpl(std::array<int64_t, 4> widths) : widths_(widths) {
    int64_t in = 3;
    for (std::size_t s = 0; s < 4; ++s) {
        const auto out = widths_[s];
        auto down = s == 0 ? torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 7).stride(4).padding(3))
                           : conv3x3(in, out, /*stride=*/2);
        const auto tag = std::to_string(s + 1);
        down_[s] = register_module("stage" + tag + "_down", down);
        conv_a_[s] = register_module("stage" + tag + "_conv_a", conv3x3(out, out));
        conv_b_[s] = register_module("stage" + tag + "_conv_b", conv3x3(out, out));
        in = out;
    }
    init_conv_parameters(*this);
}

FeaturePyramid ToyBackboneImpl::encode(const torch::Tensor& images) {
    std::array<torch::Tensor, 4> levels;
    auto x = images;
    for (std::size_t s = 0; s < 4; ++s) {
        x = torch::gelu(down_[s]->forward(x));
        x = torch::gelu(conv_a_[s]->forward(x));
        x = torch::gelu(conv_b_[s]->forward(x));
        levels[s] = x;
    }
    return {levels[0], levels[1], levels[2], levels[3]};
}

struct ScriptedBackboneImpl::Scripted {
    torch::jit::Module module;
};

namespace {

std::array<torch::Tensor, 4> unpack_levels(const c10::IValue& value) {
    std::vector<torch::Tensor> tensors;
    if (value.isTuple()) {
        for (const auto& e : value.toTupleRef().elements()) {
            tensors.push_back(e.toTensor());
        }
    } else if (value.isList()) {
        for (const auto& e : value.toListRef()) {
            tensors.push_back(e.toTensor());
        }
    } else if (value.isTensorList()) {
        tensors = value.toTensorVector();
    }
    if (tensors.size() != 4) {
        throw InputError("scripted backbone must return four feature maps");
    }
    return {tensors[0], tensors[1], tensors[2], tensors[3]};
}

std::string sanitize(std::string name) {
    for (auto& c : name) {
        if (c == '.') {
            c = '_';
        }
    }
    return name;
}

}  // namespace

ScriptedBackboneImpl::ScriptedBackboneImpl(const std::filesystem::path& path) : scripted_(std::make_unique<Scripted>()) {
    try {
        scripted_->module = torch::jit::load(path.string());
    } catch (const c10::Error& e) {
        throw InputError("cannot load scripted backbone '" + path.string() + "': " + e.what_without_backtrace());
    }
    scripted_->module.train();
    for (const auto& p : scripted_->module.named_parameters(/*recurse=*/true)) {
        register_parameter(sanitize(p.name), p.value);
    }
    for (const auto& b : scripted_->module.named_buffers(/*recurse=*/true)) {
        register_buffer(sanitize(b.name), b.value);
    }
    torch::NoGradGuard no_grad;
    const auto probe = unpack_levels(scripted_->module.forward({torch::zeros({1, 3, 64, 64})}));
    for (std::size_t i = 0; i < 4; ++i) {
        widths_[i] = probe[i].size(1);
    }
}

ScriptedBackboneImpl::~ScriptedBackboneImpl() = default;

FeaturePyramid ScriptedBackboneImpl::encode(const torch::Tensor& images) {
    if (is_training() != scripted_->module.is_training()) {
        scripted_->module.train(is_training());
    }
    const auto levels = unpack_levels(scripted_->module.forward({images}));
    return {levels[0], levels[1], levels[2], levels[3]};
}

}  // namespace segt
