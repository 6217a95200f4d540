#pragma once

#include "segt/cfm.hpp"
#include "segt/cfp.hpp"
#include "segt/eem.hpp"
#include "segt/encoder.hpp"
#include "segt/seg.hpp"

#include <torch/torch.h>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace segt {

struct ModelConfig {
    std::string backbone = "toy";    // "toy" or "scripted"
    std::string backbone_path;       // TorchScript file when backbone == "scripted"
    std::array<int64_t, 4> toy_widths = {16, 32, 64, 128};
    int64_t width = 32;              // decoder width T
    std::vector<int64_t> cfp_dilations = {1, 2, 4};
    bool cfp_split = false;
    int64_t cam_reduction = 4;
    int64_t sam_groups = 4;
    bool use_se = true;
    bool use_eg = true;
    bool use_cfm = true;
};

/// Toggle presets for the ablation rows a–g.
///   a baseline, b +SE, c +SE+EG, d +CFM, e w/o SE, f w/o EG, g full model.
ModelConfig ablation_variant(char variant, ModelConfig base = {});

struct ForwardOutput {
    FeaturePyramid pyramid;
    DecoderFeatureSet decoder;
    EdgeBundle edge;
    std::array<StreamPair, 4> streams;     // index 0 is level 1
    GuidedFeatureSet guided;
    FusionOutput fusion;
    std::array<torch::Tensor, 4> coarse;   // Out_i resized to the input
    torch::Tensor final_logits;

    /// F_1..F_4, P, EM: the six supervised logit maps at input resolution.
    [[nodiscard]] std::vector<torch::Tensor> supervised() const;
};

/// The full network: encoder → CFP → (EEM, SEG per level) → CFM.
class SegTNetImpl : public torch::nn::Module {
public:
    explicit SegTNetImpl(const ModelConfig& config);

    ForwardOutput forward(const torch::Tensor& images);

    [[nodiscard]] const ModelConfig& config() const { return config_; }
    [[nodiscard]] int64_t parameter_count() const;

    std::shared_ptr<Backbone> backbone;
    Cfp cfp{nullptr};
    EdgeExtractor eem{nullptr};
    torch::nn::Conv2d seed_head{nullptr};              // level-4 seed, SE only
    std::array<torch::nn::Conv2d, 4> coarse_heads{nullptr, nullptr, nullptr, nullptr};
    std::array<EdgeGuidance, 4> guidance{nullptr, nullptr, nullptr, nullptr};  // EG only
    CascadeFusion cfm{nullptr};                        // CFM only
    torch::nn::Conv2d additive_head{nullptr};          // without CFM
    torch::nn::Conv2d eg1_head{nullptr};

private:
    ModelConfig config_;
};
TORCH_MODULE(SegTNet);

/// Seeds torch's generator, builds the model and applies the documented init.
SegTNet build_model(const ModelConfig& config, uint64_t seed);

}  // namespace segt
