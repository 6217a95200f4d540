#include "segt/data.hpp"

#include "segt/error.hpp"
#include "segt/image_io.hpp"
#include "segt/tensor_ops.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace segt {
namespace {

namespace fs = std::filesystem;

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff";
}

std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw InputError("missing directory: " + dir.string());
    }
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_file(entry.path())) {
            continue;
        }
        const auto stem = entry.path().stem().string();
        if (!out.emplace(stem, entry.path()).second) {
            throw InputError("duplicate sample id '" + stem + "' in " + dir.string());
        }
    }
    return out;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// std::shuffle and the std distributions are implementation-defined; this
// keeps orders identical across standard libraries.
template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

torch::Tensor binarize(const torch::Tensor& x) { return (x >= 0.5).to(torch::kFloat32); }

}  // namespace

std::vector<std::string> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read split manifest: " + path.string());
    }
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        ids.push_back(line.substr(first, last - first + 1));
    }
    return ids;
}

torch::Tensor make_edge_ground_truth(const torch::Tensor& mask) {
    auto m = mask.detach().to(torch::kCPU);
    const auto shape = m.sizes().vec();
    m = m.squeeze();
    if (m.dim() != 2) {
        throw InputError("make_edge_ground_truth: expected an H×W mask");
    }
    auto m8 = ((m >= 0.5).to(torch::kUInt8) * 255).contiguous();
    const int rows = static_cast<int>(m8.size(0));
    const int cols = static_cast<int>(m8.size(1));
    cv::Mat binary(rows, cols, CV_8UC1, m8.data_ptr<uint8_t>());

    cv::Mat canny;
    cv::Canny(binary, canny, 100, 200);

    // Canny places a binary step on either side of the transition; snap each
    // response onto the foreground side so the result is the inner ring.
    const cv::Mat kernel = cv::Mat::ones(3, 3, CV_8U);
    cv::Mat near_canny;
    cv::dilate(canny, near_canny, kernel, cv::Point(-1, -1), 1, cv::BORDER_CONSTANT, cv::Scalar(0));
    cv::Mat eroded;
    cv::erode(binary, eroded, kernel, cv::Point(-1, -1), 1, cv::BORDER_REPLICATE);
    cv::Mat edge = (binary - eroded) & near_canny;

    auto out = torch::from_blob(edge.data, {rows, cols}, torch::kUInt8).gt(0).to(torch::kFloat32);
    return out.reshape(shape).clone();
}

DatasetSplit load_dataset(const fs::path& root, std::pair<int64_t, int64_t> resize_to,
                          const std::optional<fs::path>& manifest) {
    const auto [height, width] = resize_to;
    if (height <= 0 || width <= 0) {
        throw InputError("load_dataset: resize_to must be positive");
    }
    const auto images = index_by_stem(root / "images");
    const auto masks = index_by_stem(root / "masks");

    std::vector<std::string> ids;
    if (manifest) {
        ids = read_manifest(*manifest);
        std::set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second) {
                throw InputError("duplicate id '" + id + "' in manifest " + manifest->string());
            }
            if (!images.contains(id)) {
                throw InputError("manifest id '" + id + "' has no image under " + root.string());
            }
        }
        std::sort(ids.begin(), ids.end());
    } else {
        for (const auto& [stem, _] : images) {
            ids.push_back(stem);
        }
    }

    DatasetSplit split;
    split.name = root.filename().string();
    if (split.name.empty()) {
        split.name = root.parent_path().filename().string();
    }
    split.samples.reserve(ids.size());
    for (const auto& id : ids) {
        const auto mask_it = masks.find(id);
        if (mask_it == masks.end()) {
            throw InputError("missing mask for image '" + id + "'");
        }
        auto image = read_image(images.at(id)).unsqueeze(0);
        auto mask = read_mask(mask_it->second).unsqueeze(0);
        image = resize_bilinear(image, height, width).squeeze(0).clamp(0.0, 1.0).contiguous();
        mask = binarize(resize_nearest(mask, height, width)).squeeze(0).contiguous();
        auto edge = make_edge_ground_truth(mask);
        split.samples.push_back({std::move(image), std::move(mask), std::move(edge), id});
    }
    return split;
}

int64_t scaled_size(int64_t base, double scale) {
    const double target = std::round(static_cast<double>(base) * scale);
    const auto size = static_cast<int64_t>(std::floor(target / 32.0 + 0.5)) * 32;
    if (size < 64) {
        throw InputError("scaled size " + std::to_string(size) + " is below the 64-pixel minimum (base " +
                         std::to_string(base) + ", scale " + std::to_string(scale) + ")");
    }
    return size;
}

Batch make_batch(const DatasetSplit& split, std::span<const std::size_t> indices, double scale, int64_t base_size) {
    if (indices.empty()) {
        throw InputError("make_batch: no indices");
    }
    const auto size = scaled_size(base_size, scale);
    std::vector<torch::Tensor> images;
    std::vector<torch::Tensor> masks;
    std::vector<torch::Tensor> edges;
    Batch batch;
    for (const auto index : indices) {
        if (index >= split.size()) {
            throw InputError("make_batch: index " + std::to_string(index) + " out of range");
        }
        const auto& s = split.samples[index];
        auto image = resize_bilinear(s.image.unsqueeze(0), size, size).squeeze(0);
        torch::Tensor mask;
        torch::Tensor edge;
        if (s.mask.size(1) == size && s.mask.size(2) == size) {
            mask = s.mask;
            edge = s.edge_gt;
        } else {
            mask = binarize(resize_nearest(s.mask.unsqueeze(0), size, size)).squeeze(0);
            edge = make_edge_ground_truth(mask);
        }
        images.push_back(image);
        masks.push_back(mask);
        edges.push_back(edge);
        batch.ids.push_back(s.id);
    }
    batch.images = torch::stack(images).contiguous();
    batch.masks = torch::stack(masks).contiguous();
    batch.edges = torch::stack(edges).contiguous();
    return batch;
}

std::vector<std::size_t> epoch_order(std::size_t n, uint64_t seed, uint64_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(epoch)));
    fisher_yates(order, rng);
    return order;
}

double draw_scale(std::span<const double> scales, uint64_t seed, uint64_t epoch, uint64_t batch) {
    if (scales.empty()) {
        throw InputError("draw_scale: empty scale set");
    }
    std::mt19937_64 rng(splitmix64(splitmix64(seed + 0x5ca1eULL) ^ splitmix64(epoch) ^ (batch * 0x9e3779b97f4a7c15ULL)));
    return scales[static_cast<std::size_t>(rng() % scales.size())];
}

std::pair<std::vector<std::string>, std::vector<std::string>> seeded_split(std::vector<std::string> ids,
                                                                          std::size_t train_count, uint64_t seed) {
    if (train_count > ids.size()) {
        throw InputError("seeded_split: train count exceeds the number of ids");
    }
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    fisher_yates(ids, rng);
    std::vector<std::string> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_count));
    std::vector<std::string> test(ids.begin() + static_cast<std::ptrdiff_t>(train_count), ids.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

}  // namespace segt
