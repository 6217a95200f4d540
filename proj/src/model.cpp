#include "segt/model.hpp"

#include "segt/error.hpp"
#include "segt/tensor_ops.hpp"

namespace segt {

ModelConfig ablation_variant(char variant, ModelConfig base) {
    struct Toggles {
        bool se;
        bool eg;
        bool cfm;
    };
    Toggles t{};
    switch (variant) {
        case 'a': t = {false, false, false}; break;
        case 'b': t = {true, false, false}; break;
        case 'c': t = {true, true, false}; break;
        case 'd': t = {false, false, true}; break;
        case 'e': t = {false, true, true}; break;
        case 'f': t = {true, false, true}; break;
        case 'g': t = {true, true, true}; break;
        default: throw InputError(std::string("unknown ablation variant '") + variant + "' (expected a-g)");
    }
    base.use_se = t.se;
    base.use_eg = t.eg;
    base.use_cfm = t.cfm;
    return base;
}

std::vector<torch::Tensor> ForwardOutput::supervised() const {
    return {coarse[0], coarse[1], coarse[2], coarse[3], fusion.p_logits, edge.em_logits};
}

SegTNetImpl::SegTNetImpl(const ModelConfig& config) : config_(config) {
    if (config.backbone == "toy") {
        backbone = std::make_shared<ToyBackboneImpl>(config.toy_widths);
    } else if (config.backbone == "scripted") {
        if (config.backbone_path.empty()) {
            throw InputError("model.backbone_path is required for a scripted backbone");
        }
        backbone = std::make_shared<ScriptedBackboneImpl>(config.backbone_path);
    } else {
        throw InputError("unknown backbone '" + config.backbone + "' (expected toy or scripted)");
    }
    register_module("backbone", backbone);

    const auto widths = backbone->channels();
    const auto t = config.width;
    const EemOptions eem_options{};
    cfp = register_module("cfp", Cfp(widths, CfpOptions{t, config.cfp_dilations, config.cfp_split}));
    eem = register_module("eem", EdgeExtractor(widths[0], widths[3], eem_options));
    if (config.use_se) {
        seed_head = register_module("seed_head", conv1x1(t, 1));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const auto tag = std::to_string(i + 1);
        coarse_heads[i] = register_module("coarse_head" + tag, conv1x1(t, 1));
        if (config.use_eg) {
            EdgeGuidanceOptions eg{t, eem_options.edge_width, config.cam_reduction, config.sam_groups, 2};
            guidance[i] = register_module("guidance" + tag, EdgeGuidance(eg));
        }
    }
    if (config.use_cfm) {
        cfm = register_module("cfm", CascadeFusion(t));
    } else {
        additive_head = register_module("additive_head", conv1x1(t, 1));
    }
    eg1_head = register_module("eg1_head", conv1x1(t, 1));

    for (const auto& child : named_children()) {
        if (child.key() != "backbone") {
            init_conv_parameters(*child.value());
        }
    }
    // Only P and the coarse maps are supervised, so this head never receives a
    // gradient; starting at zero keeps the inference sum equal to P.
    {
        torch::NoGradGuard no_grad;
        eg1_head->weight.zero_();
    }
}

ForwardOutput SegTNetImpl::forward(const torch::Tensor& images) {
    ForwardOutput out;
    const auto h = images.size(2);
    const auto w = images.size(3);
    out.pyramid = encode(*backbone, images);
    out.decoder = cfp->forward(out.pyramid);
    out.edge = eem->forward(out.pyramid.en1, out.pyramid.en4, h, w);

    torch::Tensor coarse_next;
    if (config_.use_se) {
        coarse_next = seed_head->forward(out.decoder.c[3]);
    }
    for (int i = 3; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        const auto& c = out.decoder.c[idx];
        auto pair = config_.use_se ? separate(c, coarse_next, coarse_heads[idx]) : separate_bypass(c, coarse_heads[idx]);
        coarse_next = pair.out_coarse;
        out.guided.eg[idx] = config_.use_eg ? guidance[idx]->forward(pair, out.edge.f_e) : pair.f_feat + pair.b_feat;
        out.coarse[idx] = resize_bilinear(pair.out_coarse, h, w);
        out.streams[idx] = std::move(pair);
    }

    out.fusion = config_.use_cfm ? cfm->forward(out.guided, out.decoder.c[3], h, w)
                                 : additive_fuse(out.guided, additive_head, h, w);
    out.final_logits = final_prediction(out.guided.eg[0], out.fusion.p_logits, eg1_head);
    return out;
}

int64_t SegTNetImpl::parameter_count() const {
    int64_t n = 0;
    for (const auto& p : parameters()) {
        n += p.numel();
    }
    return n;
}

SegTNet build_model(const ModelConfig& config, uint64_t seed) {
    torch::manual_seed(seed);
    return SegTNet(config);
}

}  // namespace segt
