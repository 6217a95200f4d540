#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace segt {

class SegTNetImpl;

struct TensorRecord {
    std::string name;
    torch::Tensor tensor;
};

/// In-memory checkpoint. Tensor names are prefixed `param/`, `buffer/` or
/// `optim/`.
///
/// On disk (all integers little-endian):
///   "SEGTCKPT" | u32 format version | u64 manifest bytes | manifest JSON | payload
/// The manifest lists name, dtype, shape, offset and byte count per tensor,
/// plus the step counter and the resolved config as YAML text. Payloads are
/// raw contiguous little-endian tensor data.
struct Checkpoint {
    static constexpr uint32_t kFormatVersion = 1;

    uint32_t format_version = kFormatVersion;
    int64_t step = 0;
    std::string config_yaml;
    std::vector<TensorRecord> tensors;

    [[nodiscard]] const torch::Tensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Snapshot of parameters and buffers (deep copies).
Checkpoint capture_model(const SegTNetImpl& model, const std::string& config_yaml, int64_t step);

/// Appends AdamW moments and per-parameter step counts to `checkpoint`.
void capture_optimizer(Checkpoint& checkpoint, const SegTNetImpl& model, torch::optim::AdamW& optimizer);

/// Copies every `param/` and `buffer/` tensor into `model`. Missing or
/// mis-shaped tensors are an InputError.
void restore_model(SegTNetImpl& model, const Checkpoint& checkpoint);

void restore_optimizer(torch::optim::AdamW& optimizer, const SegTNetImpl& model, const Checkpoint& checkpoint);

}  // namespace segt
