#include <doctest.h>

#include "oracles.hpp"
#include "segt/cfm.hpp"
#include "segt/cfp.hpp"
#include "segt/eem.hpp"
#include "segt/encoder.hpp"
#include "segt/error.hpp"
#include "segt/seg.hpp"
#include "segt/tensor_ops.hpp"

#include <cmath>

using doctest::Approx;

namespace {

// Plain-loop reference for a grouped, dilated, zero-padded 2-D convolution on
// one C×H×W image. Everything is evaluated in double.
torch::Tensor conv_ref(const torch::Tensor& x_in, const torch::Tensor& w_in, const torch::Tensor& b_in, int64_t pad,
                       int64_t dilation, int64_t groups) {
    auto x = x_in.to(torch::kFloat64).contiguous();
    auto w = w_in.to(torch::kFloat64).contiguous();
    auto b = b_in.to(torch::kFloat64).contiguous();
    const auto cin = x.size(0);
    const auto h = x.size(1);
    const auto wd = x.size(2);
    const auto cout = w.size(0);
    const auto k = w.size(2);
    const auto in_per_group = cin / groups;
    const auto out_per_group = cout / groups;
    auto out = torch::zeros({cout, h, wd}, torch::kFloat64);
    auto xa = x.accessor<double, 3>();
    auto wa = w.accessor<double, 4>();
    auto ba = b.accessor<double, 1>();
    auto oa = out.accessor<double, 3>();
    for (int64_t o = 0; o < cout; ++o) {
        const auto g = o / out_per_group;
        for (int64_t r = 0; r < h; ++r) {
            for (int64_t c = 0; c < wd; ++c) {
                double acc = ba[o];
                for (int64_t i = 0; i < in_per_group; ++i) {
                    for (int64_t kr = 0; kr < k; ++kr) {
                        for (int64_t kc = 0; kc < k; ++kc) {
                            const auto rr = r - pad + kr * dilation;
                            const auto cc = c - pad + kc * dilation;
                            if (rr < 0 || rr >= h || cc < 0 || cc >= wd) continue;
                            acc += wa[o][i][kr][kc] * xa[g * in_per_group + i][rr][cc];
                        }
                    }
                }
                oa[o][r][c] = acc;
            }
        }
    }
    return out;
}

torch::Tensor conv_ref(const torch::Tensor& x, const torch::nn::Conv2d& conv) {
    const auto& opt = conv->options;
    const auto pad = std::get<torch::ExpandingArray<2>>(opt.padding())->at(0);
    return conv_ref(x, conv->weight.detach(), conv->bias.detach(), pad, opt.dilation()->at(0), opt.groups());
}

double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

torch::Tensor gelu_ref(const torch::Tensor& t) {
    auto out = t.to(torch::kFloat64).clone().contiguous();
    auto* p = out.data_ptr<double>();
    for (int64_t i = 0; i < out.numel(); ++i) p[i] = gelu(p[i]);
    return out;
}

torch::Tensor sigmoid_ref(const torch::Tensor& t) {
    auto out = t.to(torch::kFloat64).clone().contiguous();
    auto* p = out.data_ptr<double>();
    for (int64_t i = 0; i < out.numel(); ++i) p[i] = segt::testing::sigmoid(p[i]);
    return out;
}

void randomize(torch::nn::Module& m, uint64_t seed) {
    torch::NoGradGuard guard;
    auto gen = at::detail::createCPUGenerator(seed);
    for (auto& p : m.parameters()) {
        p.copy_(torch::randn(p.sizes(), gen, p.options()) * 0.5);
    }
}

void zero_all(torch::nn::Module& m) {
    torch::NoGradGuard guard;
    for (auto& p : m.parameters()) p.zero_();
}

// C×H×W channel attention oracle.
torch::Tensor cam_ref(segt::ChannelAttentionImpl& cam, const torch::Tensor& x) {
    auto pooled = x.to(torch::kFloat64).mean({1, 2}, true);
    auto global = conv_ref(gelu_ref(conv_ref(pooled, cam.global_reduce)), cam.global_expand);
    auto local = conv_ref(gelu_ref(conv_ref(x, cam.local_reduce)), cam.local_expand);
    return sigmoid_ref(global + local);
}

// C×H×W shuffle attention oracle with explicit index shuffling.
torch::Tensor sam_ref(segt::ShuffleAttentionImpl& sam, const torch::Tensor& x_in) {
    auto x = x_in.to(torch::kFloat64);
    const auto channels = x.size(0);
    const auto groups = sam.groups();
    const auto gw = channels / groups;
    auto pooled = x.mean({1, 2}, true);
    auto cgate = sigmoid_ref(conv_ref(gelu_ref(conv_ref(pooled, sam.channel_reduce)), sam.channel_expand));
    auto sgate = sigmoid_ref(conv_ref(x, sam.spatial));
    auto gated = torch::zeros_like(x);
    for (int64_t c = 0; c < channels; ++c) {
        gated[c] = x[c] * cgate[c] * sgate[c / gw];
    }
    auto out = torch::zeros_like(x);
    for (int64_t g = 0; g < groups; ++g) {
        for (int64_t j = 0; j < gw; ++j) {
            out[j * groups + g] = gated[g * gw + j];
        }
    }
    return out;
}

torch::Tensor bn_eval_ref(const torch::nn::BatchNorm2d& bn, const torch::Tensor& x) {
    auto out = torch::zeros_like(x, torch::kFloat64);
    const double eps = bn->options.eps();
    for (int64_t c = 0; c < x.size(0); ++c) {
        const double mean = bn->running_mean[c].item<double>();
        const double var = bn->running_var[c].item<double>();
        const double gamma = bn->weight[c].item<double>();
        const double beta = bn->bias[c].item<double>();
        out[c] = (x[c].to(torch::kFloat64) - mean) / std::sqrt(var + eps) * gamma + beta;
    }
    return out;
}

bool close(const torch::Tensor& a, const torch::Tensor& b, double tol) {
    return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>() < tol;
}

}  // namespace

TEST_CASE("toy backbone pyramid sizes and channels") {
    torch::manual_seed(0);
    segt::ToyBackboneImpl toy;
    auto p = segt::encode(toy, torch::rand({2, 3, 64, 64}));
    const std::array<int64_t, 4> sizes = {16, 8, 4, 2};
    const std::array<int64_t, 4> widths = {16, 32, 64, 128};
    for (int i = 0; i < 4; ++i) {
        CHECK(p.level(i + 1).size(0) == 2);
        CHECK(p.level(i + 1).size(1) == widths[i]);
        CHECK(p.level(i + 1).size(2) == sizes[i]);
        CHECK(p.level(i + 1).size(3) == sizes[i]);
    }
    auto big = segt::encode(toy, torch::rand({1, 3, 352, 352}));
    CHECK(big.en1.size(2) == 88);
    CHECK(big.en2.size(2) == 44);
    CHECK(big.en3.size(2) == 22);
    CHECK(big.en4.size(2) == 11);
    CHECK_THROWS_AS(segt::encode(toy, torch::rand({1, 3, 100, 96})), segt::InputError);
}

TEST_CASE("toy backbone is deterministic and fan-in initialised") {
    torch::manual_seed(3);
    segt::ToyBackboneImpl toy;
    auto x = torch::rand({1, 3, 64, 64});
    CHECK(torch::equal(segt::encode(toy, x).en4, segt::encode(toy, x).en4));
    for (const auto& p : toy.named_parameters()) {
        if (p.key().find("bias") != std::string::npos) {
            CHECK(p.value().abs().max().item<double>() == 0.0);
        } else {
            const auto fan_in = p.value()[0].numel();
            CHECK(p.value().abs().max().item<double>() <= std::sqrt(6.0 / static_cast<double>(fan_in)));
        }
    }
}

TEST_CASE("CFP preserves spatial size and projects to the decoder width") {
    torch::manual_seed(1);
    segt::CfpBlock block(64, segt::CfpOptions{32, {1, 2, 4}, false});
    segt::init_conv_parameters(*block);
    auto out = block->forward(torch::randn({1, 64, 8, 8}));
    CHECK(out.sizes() == torch::IntArrayRef({1, 32, 8, 8}));
    CHECK(block->forward(torch::zeros({1, 64, 8, 8})).abs().max().item<double>() == 0.0);
}

TEST_CASE("CFP with one branch is projection plus one 3x3 conv of it") {
    torch::manual_seed(2);
    segt::CfpBlock block(8, segt::CfpOptions{8, {1}, false});
    randomize(*block, 5);
    auto x = torch::randn({1, 8, 4, 4});
    auto proj = conv_ref(x[0], block->projection);
    auto expected = proj + conv_ref(proj, block->branches[0]);
    CHECK(close(block->forward(x)[0], expected, 1e-4));
}

TEST_CASE("CFP split branching needs a divisible width") {
    CHECK_THROWS_AS(segt::CfpBlock(8, segt::CfpOptions{32, {1, 2, 4}, true}), segt::InputError);
    segt::CfpBlock split(8, segt::CfpOptions{30, {1, 2, 4}, true});
    CHECK(split->forward(torch::randn({1, 8, 4, 4})).size(1) == 30);
}

TEST_CASE("edge extractor shapes at 352") {
    torch::manual_seed(4);
    segt::EdgeExtractor eem(16, 128);
    auto b = eem->forward(torch::randn({1, 16, 88, 88}), torch::randn({1, 128, 11, 11}), 352, 352);
    CHECK(b.f_e.sizes() == torch::IntArrayRef({1, 32, 88, 88}));
    CHECK(b.em_logits.sizes() == torch::IntArrayRef({1, 1, 352, 352}));
    CHECK(torch::allclose(b.edge_prob, torch::sigmoid(b.em_logits)));
    CHECK_THROWS_AS(eem->forward(torch::randn({1, 16, 88, 88}), torch::randn({1, 128, 22, 22}), 352, 352),
                    segt::InputError);
}

TEST_CASE("edge extractor degenerate parameters") {
    torch::manual_seed(5);
    segt::EdgeExtractor eem(16, 128);
    segt::init_conv_parameters(*eem);
    {
        torch::NoGradGuard guard;
        eem->head->weight.zero_();
    }
    auto b = eem->forward(torch::randn({1, 16, 16, 16}), torch::randn({1, 128, 2, 2}), 64, 64);
    CHECK(b.edge_prob.sub(0.5).abs().max().item<double>() == 0.0);
    auto z = eem->forward(torch::zeros({1, 16, 16, 16}), torch::zeros({1, 128, 2, 2}), 64, 64);
    CHECK(z.f_e.abs().max().item<double>() == 0.0);
}

TEST_CASE("edge loss fixtures") {
    auto gt = (torch::rand({2, 1, 8, 8}) > 0.5).to(torch::kFloat64);
    CHECK(segt::edge_loss((gt * 2 - 1) * 20, gt).item<double>() < 1e-8);
    CHECK(segt::edge_loss(torch::zeros_like(gt), gt).item<double>() == Approx(std::log(2.0)).epsilon(1e-12));
    auto one = torch::full({1, 1, 1, 1}, std::log(0.8 / 0.2), torch::kFloat64);
    CHECK(segt::edge_loss(one, torch::ones_like(one)).item<double>() == Approx(-std::log(0.8)).epsilon(1e-12));
    for (int i = 0; i < 10; ++i) {
        CHECK(segt::edge_loss(torch::randn({1, 1, 4, 4}) * 5, torch::rand({1, 1, 4, 4}).round()).item<double>() >= 0.0);
    }
}

TEST_CASE("separator gates") {
    auto head = segt::conv1x1(8, 1);
    auto c = torch::randn({2, 8, 6, 6});
    auto on = segt::separate(c, torch::full({2, 1, 3, 3}, 20.0), head);
    CHECK(on.b_feat.abs().max().item<double>() == 0.0);
    CHECK(torch::equal(on.f_feat, c));
    auto off = segt::separate(c, torch::full({2, 1, 3, 3}, -20.0), head);
    CHECK(off.f_feat.abs().max().item<double>() < 1e-7);
    CHECK(close(off.b_feat, c, 1e-6));
    CHECK(on.out_coarse.sizes() == torch::IntArrayRef({2, 1, 6, 6}));
    auto mixed = segt::separate(c, torch::randn({2, 1, 3, 3}) * 3, head);
    CHECK(close(mixed.f_feat + mixed.b_feat, c, 1e-6));
    CHECK(torch::equal(mixed.bg_gate, 1.0 - mixed.fg_gate));
    CHECK_THROWS_AS(segt::separate(c, torch::zeros({2, 2, 3, 3}), head), segt::InputError);
}

TEST_CASE("channel attention gate range and oracle") {
    torch::manual_seed(6);
    segt::ChannelAttention cam(8, 4);
    randomize(*cam, 8);
    auto x = torch::randn({1, 8, 1, 1});
    auto gate = cam->forward(x);
    CHECK((gate > 0).all().item<bool>());
    CHECK((gate < 1).all().item<bool>());
    CHECK(close(gate[0], cam_ref(*cam, x[0]), 1e-5));
    auto spatial = torch::randn({1, 8, 3, 3});
    CHECK(close(cam->forward(spatial)[0], cam_ref(*cam, spatial[0]), 1e-5));
    zero_all(*cam);
    CHECK(cam->forward(x).sub(0.5).abs().max().item<double>() == 0.0);
    CHECK_THROWS_AS(segt::ChannelAttention(3, 4), segt::InputError);
}

TEST_CASE("shuffle attention") {
    torch::manual_seed(7);
    auto x = torch::randn({2, 8, 3, 3});
    segt::ShuffleAttention sam(8, 4, 2);
    randomize(*sam, 9);
    CHECK(close(sam->forward(x)[1], sam_ref(*sam, x[1]), 1e-5));
    zero_all(*sam);
    CHECK(close(sam->forward(x), 0.25 * segt::channel_shuffle(x, 4), 1e-7));
    segt::ShuffleAttention single(8, 1, 2);
    zero_all(*single);
    CHECK(close(single->forward(x), 0.25 * x, 1e-7));
    CHECK_THROWS_AS(segt::ShuffleAttention(6, 4, 2), segt::InputError);
}

TEST_CASE("channel shuffle is a permutation with a known inverse") {
    auto x = torch::arange(24, torch::kFloat32).reshape({1, 24, 1, 1});
    auto y = segt::channel_shuffle(x, 4);
    CHECK(y[0][1].item<double>() == 6.0);  // channel 0 of group 1
    CHECK(torch::equal(segt::channel_shuffle(y, 6), x));
    CHECK(torch::equal(segt::channel_shuffle(x, 1), x));
    CHECK(torch::equal(std::get<0>(y.flatten().sort()), x.flatten()));
}

TEST_CASE("edge guidance matches a scalar evaluation") {
    torch::manual_seed(10);
    segt::EdgeGuidance eg(segt::EdgeGuidanceOptions{4, 4, 4, 2, 2});
    randomize(*eg, 12);
    {
        torch::NoGradGuard guard;
        eg->norm_fg->running_mean.copy_(torch::randn({4}) * 0.3);
        eg->norm_fg->running_var.copy_(torch::rand({4}) + 0.5);
        eg->norm_bg->running_mean.copy_(torch::randn({4}) * 0.3);
        eg->norm_bg->running_var.copy_(torch::rand({4}) + 0.5);
    }
    eg->eval();
    auto f = torch::randn({1, 4, 2, 2});
    auto b = torch::randn({1, 4, 2, 2});
    auto fe = torch::randn({1, 4, 2, 2});
    segt::StreamPair pair{f, b, {}, {}, {}};
    auto got = eg->forward(pair, fe);

    auto w = cam_ref(*eg->attention, (f + b)[0]);
    auto e_f = conv_ref(fe[0], eg->edge_fg);
    auto e_b = conv_ref(fe[0], eg->edge_bg);
    auto egf = bn_eval_ref(eg->norm_fg, w * f[0].to(torch::kFloat64)) * e_f + e_f;
    auto egb = bn_eval_ref(eg->norm_bg, (1 - w) * b[0].to(torch::kFloat64)) * e_b + e_b;
    auto expected = sam_ref(*eg->shuffle, egf + egb);
    CHECK(close(got[0], expected, 1e-4));
}

TEST_CASE("edge guidance degenerate cases") {
    torch::manual_seed(11);
    segt::EdgeGuidance eg(segt::EdgeGuidanceOptions{8, 8, 4, 4, 2});
    segt::init_conv_parameters(*eg);
    auto c = torch::randn({2, 8, 4, 4});
    segt::StreamPair pair{c, c * 0.3, {}, {}, {}};
    CHECK(eg->forward(pair, torch::zeros({2, 8, 4, 4})).abs().max().item<double>() == 0.0);

    // with the attention zeroed w = 0.5 and both streams share weights
    eg = segt::EdgeGuidance(segt::EdgeGuidanceOptions{8, 8, 4, 4, 2});
    zero_all(*eg->attention);
    {
        torch::NoGradGuard guard;
        eg->edge_bg->weight.copy_(eg->edge_fg->weight);
    }
    eg->eval();
    auto fe = torch::randn({2, 8, 4, 4});
    auto w = eg->attention->forward(c + c);
    CHECK(w.sub(0.5).abs().max().item<double>() == 0.0);
    auto e = eg->edge_fg->forward(fe);
    auto egf = eg->norm_fg->forward(w * c) * e + e;
    auto egb = eg->norm_bg->forward((1 - w) * c) * e + e;
    CHECK(torch::allclose(egf, egb));
}

TEST_CASE("cascade fusion with zero guidance reduces to the upsampled top level") {
    torch::manual_seed(12);
    segt::CascadeFusion cfm(8);
    segt::init_conv_parameters(*cfm);
    segt::GuidedFeatureSet g;
    const std::array<int64_t, 4> sizes = {8, 4, 2, 1};
    for (int i = 0; i < 4; ++i) g.eg[i] = torch::zeros({1, 8, sizes[i], sizes[i]});
    auto c4 = torch::randn({1, 8, 1, 1});
    auto out = cfm->forward(g, c4, 32, 32);
    for (int i = 0; i < 3; ++i) CHECK(out.f[i].abs().max().item<double>() == 0.0);
    CHECK(torch::allclose(out.p_feature, segt::resize_bilinear(c4, 8, 8)));
    CHECK(out.p_logits.sizes() == torch::IntArrayRef({1, 1, 32, 32}));

    g.eg[1] = torch::zeros({1, 4, 4, 4});
    CHECK_THROWS_AS(cfm->forward(g, c4, 32, 32), segt::InputError);
}

TEST_CASE("cascade fusion on scalar levels") {
    torch::manual_seed(13);
    segt::CascadeFusion cfm(1);
    randomize(*cfm, 14);
    segt::GuidedFeatureSet g;
    std::array<double, 4> e{};
    for (int i = 0; i < 4; ++i) {
        e[i] = 0.3 * (i + 1) - 0.5;
        g.eg[i] = torch::full({1, 1, 1, 1}, e[i]);
    }
    const double c4 = 0.7;
    auto out = cfm->forward(g, torch::full({1, 1, 1, 1}, c4), 1, 1);
    std::array<double, 4> f{};
    f[3] = c4;
    for (int i = 2; i >= 0; --i) {
        auto wt = cfm->fuse[i]->weight;
        f[i] = wt[0][0][1][1].item<double>() * f[i + 1] * e[i] + wt[0][1][1][1].item<double>() * e[i] +
               cfm->fuse[i]->bias[0].item<double>();
        CHECK(out.f[i].item<double>() == Approx(f[i]).epsilon(1e-5));
    }
    const double p = f[0] + f[1] + f[2] + f[3];
    CHECK(out.p_feature.item<double>() == Approx(p).epsilon(1e-5));
    CHECK(out.p_logits.item<double>() ==
          Approx(cfm->head->weight.item<double>() * p + cfm->head->bias.item<double>()).epsilon(1e-5));
}

TEST_CASE("final prediction adds the level-1 head to P") {
    torch::manual_seed(15);
    auto head = segt::conv1x1(8, 1);
    auto eg1 = torch::randn({1, 8, 4, 4});
    auto p = torch::randn({1, 1, 16, 16});
    auto expected = segt::resize_bilinear(head->forward(eg1), 16, 16) + p;
    CHECK(torch::allclose(segt::final_prediction(eg1, p, head), expected));
    CHECK(torch::allclose(segt::final_prediction(eg1, torch::zeros_like(p), head),
                          segt::resize_bilinear(head->forward(eg1), 16, 16)));
    zero_all(*head);
    CHECK(torch::equal(segt::final_prediction(eg1, p, head), p));
}
