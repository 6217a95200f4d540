#include "segt/checkpoint.hpp"

#include "segt/error.hpp"
#include "segt/model.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace segt {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are written in host byte order");

constexpr char kMagic[8] = {'S', 'E', 'G', 'T', 'C', 'K', 'P', 'T'};

std::string dtype_name(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return "float32";
        case torch::kFloat64: return "float64";
        case torch::kInt64: return "int64";
        case torch::kInt32: return "int32";
        case torch::kUInt8: return "uint8";
        case torch::kBool: return "bool";
        default: throw InputError(std::string("checkpoint: unsupported dtype ") + c10::toString(t));
    }
}

torch::ScalarType dtype_from_name(const std::string& name) {
    if (name == "float32") return torch::kFloat32;
    if (name == "float64") return torch::kFloat64;
    if (name == "int64") return torch::kInt64;
    if (name == "int32") return torch::kInt32;
    if (name == "uint8") return torch::kUInt8;
    if (name == "bool") return torch::kBool;
    throw InputError("checkpoint: unknown dtype '" + name + "'");
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw InputError("checkpoint: truncated header");
    }
    return v;
}

}  // namespace

const torch::Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& r : tensors) {
        if (r.name == name) {
            return &r.tensor;
        }
    }
    return nullptr;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    nlohmann::json manifest;
    manifest["format_version"] = checkpoint.format_version;
    manifest["step"] = checkpoint.step;
    manifest["config"] = checkpoint.config_yaml;
    manifest["tensors"] = nlohmann::json::array();

    std::vector<torch::Tensor> payloads;
    uint64_t offset = 0;
    for (const auto& r : checkpoint.tensors) {
        auto t = r.tensor.detach().to(torch::kCPU).contiguous();
        const auto nbytes = static_cast<uint64_t>(t.numel()) * t.element_size();
        manifest["tensors"].push_back({{"name", r.name},
                                       {"dtype", dtype_name(t.scalar_type())},
                                       {"shape", t.sizes().vec()},
                                       {"offset", offset},
                                       {"nbytes", nbytes}});
        offset += nbytes;
        payloads.push_back(std::move(t));
    }
    const auto text = manifest.dump(1);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write checkpoint: " + path.string());
    }
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, checkpoint.format_version);
    write_pod<uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : payloads) {
        out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
    }
    if (!out) {
        throw InputError("error while writing checkpoint: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read checkpoint: " + path.string());
    }
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw InputError("not a segt checkpoint: " + path.string());
    }
    Checkpoint ckpt;
    ckpt.format_version = read_pod<uint32_t>(in);
    if (ckpt.format_version != Checkpoint::kFormatVersion) {
        throw InputError("unsupported checkpoint format version " + std::to_string(ckpt.format_version));
    }
    const auto manifest_size = read_pod<uint64_t>(in);
    std::string text(manifest_size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(manifest_size));
    if (!in) {
        throw InputError("checkpoint: truncated manifest");
    }
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
        ckpt.step = manifest.at("step").get<int64_t>();
        ckpt.config_yaml = manifest.at("config").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("checkpoint: malformed manifest: ") + e.what());
    }
    const auto payload_start = in.tellg();
    for (const auto& entry : manifest.at("tensors")) {
        const auto shape = entry.at("shape").get<std::vector<int64_t>>();
        auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from_name(entry.at("dtype"))));
        const auto nbytes = entry.at("nbytes").get<uint64_t>();
        if (nbytes != static_cast<uint64_t>(t.numel()) * t.element_size()) {
            throw InputError("checkpoint: byte count mismatch for " + entry.at("name").get<std::string>());
        }
        in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<uint64_t>()));
        in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
        if (!in) {
            throw InputError("checkpoint: truncated payload for " + entry.at("name").get<std::string>());
        }
        ckpt.tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
    }
    return ckpt;
}

Checkpoint capture_model(const SegTNetImpl& model, const std::string& config_yaml, int64_t step) {
    Checkpoint ckpt;
    ckpt.step = step;
    ckpt.config_yaml = config_yaml;
    for (const auto& p : model.named_parameters()) {
        ckpt.tensors.push_back({"param/" + p.key(), p.value().detach().clone()});
    }
    for (const auto& b : model.named_buffers()) {
        ckpt.tensors.push_back({"buffer/" + b.key(), b.value().detach().clone()});
    }
    return ckpt;
}

void capture_optimizer(Checkpoint& checkpoint, const SegTNetImpl& model, torch::optim::AdamW& optimizer) {
    auto& state = optimizer.state();
    for (const auto& p : model.named_parameters()) {
        auto it = state.find(p.value().unsafeGetTensorImpl());
        if (it == state.end()) {
            continue;
        }
        const auto& s = static_cast<const torch::optim::AdamWParamState&>(*it->second);
        const auto prefix = "optim/" + p.key() + "/";
        checkpoint.tensors.push_back({prefix + "exp_avg", s.exp_avg().detach().clone()});
        checkpoint.tensors.push_back({prefix + "exp_avg_sq", s.exp_avg_sq().detach().clone()});
        checkpoint.tensors.push_back({prefix + "step", torch::tensor(s.step(), torch::kInt64)});
    }
}

void restore_model(SegTNetImpl& model, const Checkpoint& checkpoint) {
    torch::NoGradGuard no_grad;
    auto copy_into = [&](const std::string& name, torch::Tensor& dst) {
        const auto* src = checkpoint.find(name);
        if (src == nullptr) {
            throw InputError("checkpoint is missing tensor '" + name + "'");
        }
        if (src->sizes() != dst.sizes()) {
            std::ostringstream msg;
            msg << "checkpoint tensor '" << name << "' has shape " << src->sizes() << ", model expects "
                << dst.sizes();
            throw InputError(msg.str());
        }
        dst.copy_(*src);
    };
    for (auto& p : model.named_parameters()) {
        copy_into("param/" + p.key(), p.value());
    }
    for (auto& b : model.named_buffers()) {
        copy_into("buffer/" + b.key(), b.value());
    }
}

void restore_optimizer(torch::optim::AdamW& optimizer, const SegTNetImpl& model, const Checkpoint& checkpoint) {
    auto& state = optimizer.state();
    for (const auto& p : model.named_parameters()) {
        const auto prefix = "optim/" + p.key() + "/";
        const auto* exp_avg = checkpoint.find(prefix + "exp_avg");
        const auto* exp_avg_sq = checkpoint.find(prefix + "exp_avg_sq");
        const auto* step = checkpoint.find(prefix + "step");
        if (exp_avg == nullptr || exp_avg_sq == nullptr || step == nullptr) {
            continue;
        }
        auto s = std::make_unique<torch::optim::AdamWParamState>();
        s->step(step->item<int64_t>());
        s->exp_avg(exp_avg->to(p.value().options()).clone());
        s->exp_avg_sq(exp_avg_sq->to(p.value().options()).clone());
        state[p.value().unsafeGetTensorImpl()] = std::move(s);
    }
}

}  // namespace segt
