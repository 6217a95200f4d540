#pragma once

#include <torch/torch.h>

#include <array>
#include <span>

namespace segt {

/// Pixel-difficulty weights 1 + 5·|avgpool31(gt) − gt| (zero padding counted
/// in the pooling window). Values lie in [1, 6].
torch::Tensor pixel_weight_map(const torch::Tensor& gt);

/// Σ(w·bce) / Σw per image, averaged over the batch.
torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight);

/// 1 − (inter + 1) / (union + 1) with weighted soft intersection/union, per
/// image, averaged over the batch.
torch::Tensor weighted_iou(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight);

/// L_t = weighted BCE + weighted IoU.
torch::Tensor structure_loss(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight);

struct LossBreakdown {
    torch::Tensor l_edge;
    std::array<torch::Tensor, 4> l_t_f;  // L_t(F_i, G), index 0 is level 1
    torch::Tensor l_t_p;
    torch::Tensor total;

    /// Detached scalar values in the order edge, f1..f4, p, total.
    [[nodiscard]] std::array<double, 7> values() const;
};

/// Six-output deep supervision loss. `maps` holds, in order, F_1..F_4, P and
/// the edge logits, all at the resolution of `gt`. One weight map is computed
/// from `gt` and shared by the five L_t terms; the edge term is plain BCE.
LossBreakdown total_loss(std::span<const torch::Tensor> maps, const torch::Tensor& gt, const torch::Tensor& edge_gt);

}  // namespace segt
