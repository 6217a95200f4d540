#pragma once

#include "segt/data.hpp"

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace segt {

class SegTNetImpl;

// Overlap metrics on binary maps. Both-empty pairs score 1.
double dice(const torch::Tensor& pred_bin, const torch::Tensor& gt);
double iou(const torch::Tensor& pred_bin, const torch::Tensor& gt);

// Mean absolute error of a continuous probability map in [0,1].
double mae(const torch::Tensor& pred_prob, const torch::Tensor& gt);

struct ImageMetrics {
    std::string id;
    double dice = 0.0;
    double iou = 0.0;
    double mae = 0.0;
};

struct MetricsReport {
    std::vector<ImageMetrics> per_image;
    double m_dice = 0.0;
    double m_iou = 0.0;
    double mae_mean = 0.0;
    std::string split_name;
};

/// Maps one sample to a probability map with the sample's mask shape.
using ProbabilityFn = std::function<torch::Tensor(const ImageSample&)>;

MetricsReport evaluate(const ProbabilityFn& predict_probability, const DatasetSplit& split, double threshold = 0.5);

/// Runs the inference path of `model` (eval mode, no grad) on every sample.
MetricsReport evaluate(SegTNetImpl& model, const DatasetSplit& split, double threshold = 0.5);

/// CSV with header `id,dice,iou,mae`, one row per image, then a `mean` row.
void write_report_csv(const MetricsReport& report, const std::filesystem::path& path);

std::string format_summary(const MetricsReport& report);

}  // namespace segt
