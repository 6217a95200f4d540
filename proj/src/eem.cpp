#include "segt/eem.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

#include <sstream>

namespace segt {

EdgeExtractorImpl::EdgeExtractorImpl(int64_t en1_channels, int64_t en4_channels, const EemOptions& options) {
    reduce_low = register_module("reduce_low", conv1x1(en1_channels, options.low_width));
    reduce_high = register_module("reduce_high", conv1x1(en4_channels, options.high_width));
    fuse_a = register_module("fuse_a", conv3x3(options.low_width + options.high_width, options.edge_width));
    fuse_b = register_module("fuse_b", conv3x3(options.edge_width, options.edge_width));
    head = register_module("head", conv1x1(options.edge_width, 1));
}

EdgeBundle EdgeExtractorImpl::forward(const torch::Tensor& en1, const torch::Tensor& en4, int64_t output_height,
                                      int64_t output_width) {
    require_nchw(en1, "eem en1");
    require_nchw(en4, "eem en4");
    if (en1.size(2) != 8 * en4.size(2) || en1.size(3) != 8 * en4.size(3) || output_height != 4 * en1.size(2) ||
        output_width != 4 * en1.size(3)) {
        std::ostringstream msg;
        msg << "eem: stride mismatch (en1 " << en1.sizes() << ", en4 " << en4.sizes() << ", output "
            << output_height << "x" << output_width << ")";
        throw InputError(msg.str());
    }
    auto low = reduce_low->forward(en1);
    auto high = resize_like(reduce_high->forward(en4), low);
    auto x = torch::gelu(fuse_a->forward(torch::cat({low, high}, 1)));
    auto f_e = torch::gelu(fuse_b->forward(x));
    auto em = resize_bilinear(head->forward(f_e), output_height, output_width);
    return {f_e, em, torch::sigmoid(em)};
}

torch::Tensor edge_loss(const torch::Tensor& em_logits, const torch::Tensor& edge_gt) {
    require_same_shape(em_logits, edge_gt, "edge_loss");
    return torch::binary_cross_entropy_with_logits(em_logits, edge_gt.to(em_logits.scalar_type()));
}

}  // namespace segt
