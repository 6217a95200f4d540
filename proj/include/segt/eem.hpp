#pragma once

#include <torch/torch.h>

namespace segt {

struct EdgeBundle {
    torch::Tensor f_e;        // B×32×(H/4)×(W/4)
    torch::Tensor em_logits;  // B×1×H×W
    torch::Tensor edge_prob;  // sigmoid(em_logits)
};

struct EemOptions {
    int64_t low_width = 32;
    int64_t high_width = 256;
    int64_t edge_width = 32;
};

/// Edge extractor: fuses the stride-4 and stride-32 encoder levels into the
/// shared edge feature f_e and a full-resolution edge logit map.
class EdgeExtractorImpl : public torch::nn::Module {
public:
    EdgeExtractorImpl(int64_t en1_channels, int64_t en4_channels, const EemOptions& options = {});

    /// `output_height`/`output_width` give the input image resolution.
    EdgeBundle forward(const torch::Tensor& en1, const torch::Tensor& en4, int64_t output_height,
                       int64_t output_width);

    torch::nn::Conv2d reduce_low{nullptr};
    torch::nn::Conv2d reduce_high{nullptr};
    torch::nn::Conv2d fuse_a{nullptr};
    torch::nn::Conv2d fuse_b{nullptr};
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(EdgeExtractor);

/// Mean binary cross-entropy between sigmoid(em_logits) and edge_gt over all
/// pixels of the batch. Unweighted.
torch::Tensor edge_loss(const torch::Tensor& em_logits, const torch::Tensor& edge_gt);

}  // namespace segt
