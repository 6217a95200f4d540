#include "segt/trainer.hpp"

#include "segt/error.hpp"
#include "segt/image_io.hpp"
#include "segt/losses.hpp"
#include "segt/tensor_ops.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <fstream>

namespace segt {

TrainResult train(const TrainConfig& config, const DatasetSplit& split, const StepCallback& on_step) {
    validate(config);
    if (split.empty()) {
        throw InputError("train: split '" + split.name + "' is empty");
    }
    torch::set_num_threads(1);

    TrainResult result;
    result.model = build_model(config.model, config.seed);
    auto& model = *result.model;
    model.train();

    torch::optim::AdamW optimizer(model.parameters(),
                                  torch::optim::AdamWOptions(config.learning_rate).weight_decay(config.weight_decay));

    const auto n = split.size();
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    const auto batches_per_epoch = (n + batch_size - 1) / batch_size;
    int64_t step = 0;
    bool done = false;
    for (int64_t epoch = 0; epoch < config.epochs && !done; ++epoch) {
        const auto order = epoch_order(n, config.seed, static_cast<uint64_t>(epoch));
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const auto begin = b * batch_size;
            const auto end = std::min(n, begin + batch_size);
            const std::span<const std::size_t> indices(order.data() + begin, end - begin);
            const auto scale = draw_scale(config.scales, config.seed, static_cast<uint64_t>(epoch), b);
            const auto batch = make_batch(split, indices, scale, config.base_size);

            auto out = model.forward(batch.images);
            const auto maps = out.supervised();
            auto losses = total_loss(maps, batch.masks, batch.edges);
            const auto values = losses.values();
            if (!std::isfinite(values[6])) {
                throw NumericalError(fmt::format("non-finite loss at step {} (epoch {}, batch {}, scale {}): ids [{}]",
                                                 step + 1, epoch, b, scale, fmt::join(batch.ids, ", ")));
            }
            optimizer.zero_grad();
            losses.total.backward();
            torch::nn::utils::clip_grad_norm_(model.parameters(), config.grad_clip_norm);
            optimizer.step();
            ++step;

            StepLog entry{step, epoch, static_cast<int64_t>(b), scale, values};
            if (on_step) {
                on_step(entry);
            }
            result.log.push_back(entry);
            if (config.max_steps > 0 && step >= config.max_steps) {
                done = true;
                break;
            }
        }
    }

    result.checkpoint = capture_model(model, to_yaml(config), step);
    capture_optimizer(result.checkpoint, model, optimizer);
    return result;
}

SegTNet model_from_checkpoint(const Checkpoint& checkpoint) {
    const auto config = config_from_yaml(checkpoint.config_yaml);
    auto model = build_model(config.model, config.seed);
    for (const auto& r : checkpoint.tensors) {
        if (r.name.rfind("param/", 0) == 0) {
            model->to(r.tensor.scalar_type());
            break;
        }
    }
    restore_model(*model, checkpoint);
    return model;
}

void write_loss_log(const std::vector<StepLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write loss log: " + path.string());
    }
    out << "step,epoch,batch,scale,l_edge,l_f1,l_f2,l_f3,l_f4,l_p,total\n";
    for (const auto& e : log) {
        out << fmt::format("{},{},{},{}", e.step, e.epoch, e.batch, e.scale);
        for (const auto v : e.losses) {
            out << fmt::format(",{:.17g}", v);
        }
        out << '\n';
    }
}

Prediction predict(SegTNetImpl& model, const torch::Tensor& image, double threshold) {
    if (image.dim() != 3 || image.size(0) != 3) {
        throw InputError("predict: expected a 3×H×W image");
    }
    const bool was_training = model.is_training();
    model.eval();
    torch::NoGradGuard no_grad;

    const auto h = image.size(1);
    const auto w = image.size(2);
    const auto padded_h = std::max<int64_t>(32, (h + 31) / 32 * 32);
    const auto padded_w = std::max<int64_t>(32, (w + 31) / 32 * 32);
    const auto dtype = model.parameters().front().scalar_type();
    auto x = image.unsqueeze(0).to(dtype);
    if (padded_h != h || padded_w != w) {
        namespace F = torch::nn::functional;
        const bool reflectable = padded_h - h < h && padded_w - w < w;
        F::PadFuncOptions options({0, padded_w - w, 0, padded_h - h});
        if (reflectable) {
            options.mode(torch::kReflect);
        } else {
            options.mode(torch::kReplicate);
        }
        x = F::pad(x, options);
    }
    auto logits = model.forward(x).final_logits;
    logits = logits.index({0, 0, torch::indexing::Slice(0, h), torch::indexing::Slice(0, w)});
    model.train(was_training);

    Prediction p;
    p.probability = torch::sigmoid(logits).to(torch::kFloat32).contiguous();
    p.mask = (p.probability > threshold).to(torch::kFloat32);
    p.overlay = draw_overlay(image, p.mask);
    return p;
}

void write_prediction(const Prediction& prediction, const std::filesystem::path& out_dir, const std::string& stem) {
    std::filesystem::create_directories(out_dir);
    write_gray(out_dir / (stem + "_prob.png"), prediction.probability);
    write_gray(out_dir / (stem + "_mask.png"), prediction.mask);
    write_rgb(out_dir / (stem + "_overlay.png"), prediction.overlay);
}

}  // namespace segt
