#include "segt/losses.hpp"

#include "segt/eem.hpp"
#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

namespace segt {
namespace {

const std::vector<int64_t> kImageDims = {1, 2, 3};

void check_inputs(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight,
                  std::string_view what) {
    require_nchw(logits, what);
    require_same_shape(logits, gt, what);
    require_same_shape(logits, weight, what);
}

}  // namespace

torch::Tensor pixel_weight_map(const torch::Tensor& gt) {
    require_nchw(gt, "pixel_weight_map");
    auto g = gt.detach();
    auto local_mean = torch::avg_pool2d(g, {31, 31}, {1, 1}, {15, 15}, /*ceil_mode=*/false,
                                        /*count_include_pad=*/true);
    return 1.0 + 5.0 * torch::abs(local_mean - g);
}

torch::Tensor weighted_bce(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight) {
    check_inputs(logits, gt, weight, "weighted_bce");
    auto bce = torch::binary_cross_entropy_with_logits(logits, gt.to(logits.scalar_type()), {}, {},
                                                       at::Reduction::None);
    auto per_image = (weight * bce).sum(kImageDims) / weight.sum(kImageDims);
    return per_image.mean();
}

torch::Tensor weighted_iou(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight) {
    check_inputs(logits, gt, weight, "weighted_iou");
    auto p = torch::sigmoid(logits);
    auto inter = (weight * p * gt).sum(kImageDims);
    auto uni = (weight * (p + gt)).sum(kImageDims) - inter;
    return (1.0 - (inter + 1.0) / (uni + 1.0)).mean();
}

torch::Tensor structure_loss(const torch::Tensor& logits, const torch::Tensor& gt, const torch::Tensor& weight) {
    return weighted_bce(logits, gt, weight) + weighted_iou(logits, gt, weight);
}

std::array<double, 7> LossBreakdown::values() const {
    return {l_edge.item<double>(),   l_t_f[0].item<double>(), l_t_f[1].item<double>(), l_t_f[2].item<double>(),
            l_t_f[3].item<double>(), l_t_p.item<double>(),    total.item<double>()};
}

LossBreakdown total_loss(std::span<const torch::Tensor> maps, const torch::Tensor& gt, const torch::Tensor& edge_gt) {
    if (maps.size() != 6) {
        throw InputError("total_loss: expected six supervised maps (F1..F4, P, edge), got " +
                         std::to_string(maps.size()));
    }
    require_nchw(gt, "total_loss ground truth");
    const auto weight = pixel_weight_map(gt).to(maps[0].scalar_type());
    const auto target = gt.to(maps[0].scalar_type());
    LossBreakdown out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.l_t_f[i] = structure_loss(maps[i], target, weight);
    }
    out.l_t_p = structure_loss(maps[4], target, weight);
    out.l_edge = edge_loss(maps[5], edge_gt);
    out.total = out.l_t_f[0] + out.l_t_f[1] + out.l_t_f[2] + out.l_t_f[3] + out.l_t_p + out.l_edge;
    return out;
}

}  // namespace segt
