#include "segt/metrics.hpp"

#include "segt/error.hpp"
#include "segt/model.hpp"
#include "segt/tensor_ops.hpp"

#include <fmt/format.h>

#include <fstream>

namespace segt {
namespace {

struct Counts {
    int64_t pred = 0;
    int64_t gt = 0;
    int64_t both = 0;
};

Counts count(const torch::Tensor& pred_bin, const torch::Tensor& gt, std::string_view what) {
    require_same_shape(pred_bin, gt, what);
    auto p = pred_bin.detach() > 0.5;
    auto g = gt.detach() > 0.5;
    return {p.sum().item<int64_t>(), g.sum().item<int64_t>(), (p & g).sum().item<int64_t>()};
}

}  // namespace

double dice(const torch::Tensor& pred_bin, const torch::Tensor& gt) {
    const auto c = count(pred_bin, gt, "dice");
    if (c.pred + c.gt == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.gt);
}

double iou(const torch::Tensor& pred_bin, const torch::Tensor& gt) {
    const auto c = count(pred_bin, gt, "iou");
    const auto uni = c.pred + c.gt - c.both;
    if (uni == 0) {
        return 1.0;
    }
    return static_cast<double>(c.both) / static_cast<double>(uni);
}

double mae(const torch::Tensor& pred_prob, const torch::Tensor& gt) {
    require_same_shape(pred_prob, gt, "mae");
    auto p = pred_prob.detach().to(torch::kFloat64);
    if (p.numel() == 0) {
        throw InputError("mae: empty map");
    }
    if (p.min().item<double>() < 0.0 || p.max().item<double>() > 1.0) {
        throw InputError("mae: prediction outside [0,1]");
    }
    return (p - gt.detach().to(torch::kFloat64)).abs().mean().item<double>();
}

MetricsReport evaluate(const ProbabilityFn& predict_probability, const DatasetSplit& split, double threshold) {
    if (split.empty()) {
        throw InputError("evaluate: split '" + split.name + "' is empty");
    }
    MetricsReport report;
    report.split_name = split.name;
    double sum_dice = 0.0;
    double sum_iou = 0.0;
    double sum_mae = 0.0;
    for (const auto& sample : split.samples) {
        auto prob = predict_probability(sample).detach().to(torch::kFloat64).reshape(sample.mask.sizes());
        auto bin = (prob > threshold).to(torch::kFloat64);
        ImageMetrics m{sample.id, dice(bin, sample.mask), iou(bin, sample.mask), mae(prob, sample.mask)};
        sum_dice += m.dice;
        sum_iou += m.iou;
        sum_mae += m.mae;
        report.per_image.push_back(std::move(m));
    }
    const auto n = static_cast<double>(report.per_image.size());
    report.m_dice = sum_dice / n;
    report.m_iou = sum_iou / n;
    report.mae_mean = sum_mae / n;
    return report;
}

MetricsReport evaluate(SegTNetImpl& model, const DatasetSplit& split, double threshold) {
    const bool was_training = model.is_training();
    model.eval();
    torch::NoGradGuard no_grad;
    const auto dtype = model.parameters().front().scalar_type();
    auto report = evaluate(
        [&](const ImageSample& s) {
            auto out = model.forward(s.image.unsqueeze(0).to(dtype));
            return torch::sigmoid(out.final_logits).squeeze(0);
        },
        split, threshold);
    model.train(was_training);
    return report;
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write metrics table: " + path.string());
    }
    out << "id,dice,iou,mae\n";
    for (const auto& m : report.per_image) {
        out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", m.id, m.dice, m.iou, m.mae);
    }
    out << fmt::format("mean,{:.6f},{:.6f},{:.6f}\n", report.m_dice, report.m_iou, report.mae_mean);
}

std::string format_summary(const MetricsReport& report) {
    return fmt::format("split {}: {} images  mDice {:.4f}  mIoU {:.4f}  MAE {:.4f}\n", report.split_name,
                       report.per_image.size(), report.m_dice, report.m_iou, report.mae_mean);
}

}  // namespace segt
