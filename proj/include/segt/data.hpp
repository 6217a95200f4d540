#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace segt {

/// One image/mask pair at its loaded resolution.
///
/// Tensors are channel-first: `image` is 3×H×W float32 in [0,1], `mask` and
/// `edge_gt` are 1×H×W float32 holding exactly 0 or 1.
struct ImageSample {
    torch::Tensor image;
    torch::Tensor mask;
    torch::Tensor edge_gt;
    std::string id;
};

/// Ordered collection of samples; ids are unique and sorted lexicographically.
struct DatasetSplit {
    std::vector<ImageSample> samples;
    std::string name;
    bool seen = true;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
};

struct Batch {
    torch::Tensor images;   // B×3×H×W
    torch::Tensor masks;    // B×1×H×W
    torch::Tensor edges;    // B×1×H×W
    std::vector<std::string> ids;
};

/// Loads `root/images/*.{png,jpg,jpeg}` with matching `root/masks/<stem>.png`.
///
/// Images are resized bilinearly, masks with nearest neighbour and then
/// thresholded at 0.5 of their value range. Edge ground truth is derived from
/// the resized mask. When `manifest` is given, only the ids it lists (one per
/// line; blank lines and `#` comments are ignored) are loaded. Every listed id
/// must exist.
DatasetSplit load_dataset(const std::filesystem::path& root, std::pair<int64_t, int64_t> resize_to,
                          const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Reads a split manifest: one sample id per line.
std::vector<std::string> read_manifest(const std::filesystem::path& path);

/// Edge ground truth for a binary mask (H×W or 1×H×W).
///
/// Canny (thresholds 100/200) runs on the {0,255}-scaled mask; each detected
/// transition is then localized to the foreground side, giving a 1-pixel-wide
/// inner boundary. Image borders are not boundaries (replicate border), so
/// all-zero and all-one masks yield empty edge maps.
torch::Tensor make_edge_ground_truth(const torch::Tensor& mask);

/// Side length after multi-scale rescaling: round(base * scale) snapped to the
/// nearest multiple of 32 (ties round up). Throws InputError below 64.
int64_t scaled_size(int64_t base, double scale);

/// Stacks `indices` of `split` into a batch rescaled to scaled_size(base, scale).
Batch make_batch(const DatasetSplit& split, std::span<const std::size_t> indices, double scale,
                 int64_t base_size);

/// Deterministic permutation of [0, n) for a given (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, uint64_t seed, uint64_t epoch);

/// Deterministic draw of one element of `scales` for a given (seed, epoch, batch).
double draw_scale(std::span<const double> scales, uint64_t seed, uint64_t epoch, uint64_t batch);

/// Seeded shuffle of `ids` followed by a cut: the first `train_count` go to
/// training, the rest to testing. Both halves come back sorted.
std::pair<std::vector<std::string>, std::vector<std::string>> seeded_split(std::vector<std::string> ids,
                                                                          std::size_t train_count,
                                                                          uint64_t seed);

}  // namespace segt
