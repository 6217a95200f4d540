#pragma once

#include "segt/checkpoint.hpp"
#include "segt/config.hpp"
#include "segt/data.hpp"
#include "segt/model.hpp"

#include <torch/torch.h>

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace segt {

struct StepLog {
    int64_t step = 0;   // 1-based
    int64_t epoch = 0;
    int64_t batch = 0;
    double scale = 1.0;
    std::array<double, 7> losses{};  // edge, f1..f4, p, total
};

struct TrainResult {
    SegTNet model{nullptr};
    Checkpoint checkpoint;
    std::vector<StepLog> log;
};

using StepCallback = std::function<void(const StepLog&)>;

/// AdamW training with global-norm gradient clipping. Single-threaded and
/// deterministic for a given config. A non-finite loss raises NumericalError
/// naming the step and the sample ids of the batch.
TrainResult train(const TrainConfig& config, const DatasetSplit& split, const StepCallback& on_step = {});

/// Model and config rebuilt from a checkpoint.
SegTNet model_from_checkpoint(const Checkpoint& checkpoint);

void write_loss_log(const std::vector<StepLog>& log, const std::filesystem::path& path);

struct Prediction {
    torch::Tensor probability;  // H×W float in [0,1]
    torch::Tensor mask;         // H×W float {0,1}
    torch::Tensor overlay;      // 3×H×W uint8, predicted boundary drawn on the input
};

/// Inference on one 3×H×W image. Sizes that are not multiples of 32 are
/// reflection-padded up to the next multiple and the result is cropped back.
Prediction predict(SegTNetImpl& model, const torch::Tensor& image, double threshold = 0.5);

void write_prediction(const Prediction& prediction, const std::filesystem::path& out_dir, const std::string& stem);

}  // namespace segt
