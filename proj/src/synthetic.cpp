#include "segt/synthetic.hpp"

#include "segt/error.hpp"
#include "segt/image_io.hpp"

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace segt {
namespace {

struct Scene {
    torch::Tensor image;  // 3×S×S
    torch::Tensor mask;   // 1×S×S
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    // Portable: avoids std::uniform_real_distribution.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

Scene make_scene(int64_t size, std::mt19937_64& rng) {
    const auto s = static_cast<double>(size);
    cv::Mat mask = cv::Mat::zeros(static_cast<int>(size), static_cast<int>(size), CV_8UC1);
    const cv::Point center(static_cast<int>(uniform(rng, 0.3, 0.7) * s), static_cast<int>(uniform(rng, 0.3, 0.7) * s));
    const cv::Size axes(static_cast<int>(uniform(rng, 0.12, 0.28) * s), static_cast<int>(uniform(rng, 0.10, 0.24) * s));
    cv::ellipse(mask, center, axes, uniform(rng, 0.0, 180.0), 0.0, 360.0, cv::Scalar(255), cv::FILLED);
    auto m = torch::from_blob(mask.data, {1, size, size}, torch::kUInt8).to(torch::kFloat32) / 255.0;

    auto yy = torch::linspace(0.0, 1.0, size).view({size, 1}).expand({size, size});
    auto xx = torch::linspace(0.0, 1.0, size).view({1, size}).expand({size, size});
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    auto shading = 0.85 + 0.15 * torch::sin(3.0 * xx + 2.0 * yy + phase);

    const std::array<double, 3> mucosa = {uniform(rng, 0.70, 0.80), uniform(rng, 0.38, 0.46), uniform(rng, 0.36, 0.44)};
    const std::array<double, 3> lesion = {uniform(rng, 0.88, 0.96), uniform(rng, 0.55, 0.65), uniform(rng, 0.30, 0.38)};
    std::vector<torch::Tensor> channels;
    for (std::size_t c = 0; c < 3; ++c) {
        channels.push_back((mucosa[c] * (1.0 - m[0]) + lesion[c] * m[0]) * shading);
    }
    auto image = torch::stack(channels);
    auto gen = at::detail::createCPUGenerator(rng());
    image = (image + 0.03 * torch::randn({3, size, size}, gen)).clamp(0.0, 1.0);
    return {image.contiguous(), (m >= 0.5).to(torch::kFloat32)};
}

}  // namespace

DatasetSplit synthetic_split(std::size_t count, int64_t size, uint64_t seed, const std::string& name) {
    if (size < 32) {
        throw InputError("synthetic_split: size must be at least 32");
    }
    std::mt19937_64 rng(seed);
    DatasetSplit split;
    split.name = name;
    for (std::size_t i = 0; i < count; ++i) {
        auto scene = make_scene(size, rng);
        auto edge = make_edge_ground_truth(scene.mask);
        split.samples.push_back({scene.image, scene.mask, edge, fmt::format("sample_{:03}", i)});
    }
    return split;
}

void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count, int64_t size, uint64_t seed) {
    std::filesystem::create_directories(root / "images");
    std::filesystem::create_directories(root / "masks");
    const auto split = synthetic_split(count, size, seed);
    for (const auto& s : split.samples) {
        write_rgb(root / "images" / (s.id + ".png"), s.image);
        write_gray(root / "masks" / (s.id + ".png"), s.mask);
    }
}

}  // namespace segt
