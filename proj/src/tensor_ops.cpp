#include "segt/tensor_ops.hpp"

#include "segt/error.hpp"

#include <cmath>
#include <sstream>

namespace segt {

namespace F = torch::nn::functional;

torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width) {
    if (x.size(2) == height && x.size(3) == width) {
        return x;
    }
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{height, width})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& like) {
    return resize_bilinear(x, like.size(2), like.size(3));
}

torch::Tensor resize_nearest(const torch::Tensor& x, int64_t height, int64_t width) {
    if (x.size(2) == height && x.size(3) == width) {
        return x;
    }
    return F::interpolate(
        x, F::InterpolateFuncOptions().size(std::vector<int64_t>{height, width}).mode(torch::kNearest));
}

void require_nchw(const torch::Tensor& x, std::string_view what) {
    if (!x.defined() || x.dim() != 4) {
        std::ostringstream msg;
        msg << what << ": expected a 4-D NCHW tensor";
        if (x.defined()) {
            msg << ", got " << x.sizes();
        }
        throw InputError(msg.str());
    }
}

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, std::string_view what) {
    if (a.sizes() != b.sizes()) {
        std::ostringstream msg;
        msg << what << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
        throw InputError(msg.str());
    }
}

void init_conv_parameters(torch::nn::Module& module) {
    torch::NoGradGuard no_grad;
    auto init = [](torch::nn::Module& m) {
        if (auto* conv = m.as<torch::nn::Conv2d>()) {
            const auto fan_in = conv->weight.size(1) * conv->weight.size(2) * conv->weight.size(3);
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            conv->weight.uniform_(-bound, bound);
            if (conv->bias.defined()) {
                conv->bias.zero_();
            }
        }
    };
    // modules(true) needs the root to live in a shared_ptr, which is not the
    // case while a module is still being constructed.
    init(module);
    for (auto& child : module.modules(/*include_self=*/false)) {
        init(*child);
    }
}

torch::nn::Conv2d conv1x1(int64_t in, int64_t out) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1));
}

torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride, int64_t dilation) {
    return torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(dilation).dilation(dilation));
}

}  // namespace segt
