#include "segt/config.hpp"

#include "segt/data.hpp"
#include "segt/error.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <sstream>

namespace segt {
namespace {

template <typename T>
T as(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception& e) {
        throw InputError("config key '" + key + "': " + e.msg);
    }
}

// Doubles are emitted in shortest round-trip form.
template <typename T>
YAML::Node to_node(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
        return YAML::Node(fmt::format("{}", v));
    } else {
        return YAML::Node(v);
    }
}

template <typename T, typename Field>
ConfigKey scalar_key(std::string name, std::string help, Field field) {
    ConfigKey k;
    k.name = name;
    k.help = std::move(help);
    k.get = [field](const TrainConfig& c) { return to_node(field(const_cast<TrainConfig&>(c))); };
    k.set = [field, name](TrainConfig& c, const YAML::Node& n) {
        if constexpr (std::is_same_v<T, std::string>) {
            field(c) = n.IsNull() ? std::string{} : as<std::string>(n, name);
        } else {
            field(c) = as<T>(n, name);
        }
    };
    return k;
}

template <typename T, typename Field>
ConfigKey list_key(std::string name, std::string help, Field field) {
    ConfigKey k;
    k.name = name;
    k.help = std::move(help);
    k.get = [field](const TrainConfig& c) {
        YAML::Node n(YAML::NodeType::Sequence);
        for (const auto& v : field(const_cast<TrainConfig&>(c))) {
            n.push_back(to_node(v));
        }
        n.SetStyle(YAML::EmitterStyle::Flow);
        return n;
    };
    k.set = [field, name](TrainConfig& c, const YAML::Node& n) {
        if (!n.IsSequence()) {
            throw InputError("config key '" + name + "' expects a list");
        }
        auto& dst = field(c);
        using Container = std::decay_t<decltype(dst)>;
        if constexpr (std::is_same_v<Container, std::array<int64_t, 4>>) {
            if (n.size() != 4) {
                throw InputError("config key '" + name + "' expects four values");
            }
            for (std::size_t i = 0; i < 4; ++i) {
                dst[i] = as<T>(n[i], name);
            }
        } else {
            dst.clear();
            for (const auto& v : n) {
                dst.push_back(as<T>(v, name));
            }
        }
    };
    return k;
}

std::vector<ConfigKey> make_keys() {
    std::vector<ConfigKey> keys;
    // clang-format off
    keys.push_back(scalar_key<std::string>("data.train_root", "dataset root with images/ and masks/",
        [](TrainConfig& c) -> auto& { return c.train_root; }));
    keys.push_back(scalar_key<std::string>("data.manifest", "optional split manifest (one id per line)",
        [](TrainConfig& c) -> auto& { return c.manifest; }));
    keys.push_back(scalar_key<int64_t>("data.base_size", "square training resolution before multi-scale",
        [](TrainConfig& c) -> auto& { return c.base_size; }));
    keys.push_back(scalar_key<std::string>("model.backbone", "toy | scripted",
        [](TrainConfig& c) -> auto& { return c.model.backbone; }));
    keys.push_back(scalar_key<std::string>("model.backbone_path", "TorchScript pyramid backbone (scripted only)",
        [](TrainConfig& c) -> auto& { return c.model.backbone_path; }));
    keys.push_back(list_key<int64_t>("model.toy_widths", "toy backbone stage widths",
        [](TrainConfig& c) -> auto& { return c.model.toy_widths; }));
    keys.push_back(scalar_key<int64_t>("model.width", "decoder width T",
        [](TrainConfig& c) -> auto& { return c.model.width; }));
    keys.push_back(list_key<int64_t>("model.cfp_dilations", "CFP branch dilations",
        [](TrainConfig& c) -> auto& { return c.model.cfp_dilations; }));
    keys.push_back(scalar_key<bool>("model.cfp_split", "CFP branches split the width instead of summing",
        [](TrainConfig& c) -> auto& { return c.model.cfp_split; }));
    keys.push_back(scalar_key<int64_t>("model.cam_reduction", "channel attention bottleneck reduction",
        [](TrainConfig& c) -> auto& { return c.model.cam_reduction; }));
    keys.push_back(scalar_key<int64_t>("model.sam_groups", "shuffle attention group count",
        [](TrainConfig& c) -> auto& { return c.model.sam_groups; }));
    keys.push_back(scalar_key<bool>("model.use_se", "separator block",
        [](TrainConfig& c) -> auto& { return c.model.use_se; }));
    keys.push_back(scalar_key<bool>("model.use_eg", "edge-guidance block",
        [](TrainConfig& c) -> auto& { return c.model.use_eg; }));
    keys.push_back(scalar_key<bool>("model.use_cfm", "cascade fusion module",
        [](TrainConfig& c) -> auto& { return c.model.use_cfm; }));
    keys.push_back(scalar_key<double>("train.learning_rate", "AdamW learning rate",
        [](TrainConfig& c) -> auto& { return c.learning_rate; }));
    keys.push_back(scalar_key<double>("train.weight_decay", "AdamW decoupled weight decay",
        [](TrainConfig& c) -> auto& { return c.weight_decay; }));
    keys.push_back(scalar_key<int64_t>("train.batch_size", "images per optimization step",
        [](TrainConfig& c) -> auto& { return c.batch_size; }));
    keys.push_back(scalar_key<int64_t>("train.epochs", "passes over the training split",
        [](TrainConfig& c) -> auto& { return c.epochs; }));
    keys.push_back(scalar_key<int64_t>("train.max_steps", "stop after this many steps (0: no limit)",
        [](TrainConfig& c) -> auto& { return c.max_steps; }));
    keys.push_back(list_key<double>("train.scales", "multi-scale factors, one drawn per batch",
        [](TrainConfig& c) -> auto& { return c.scales; }));
    keys.push_back(scalar_key<uint64_t>("train.seed", "seed for init, shuffling and scale draws",
        [](TrainConfig& c) -> auto& { return c.seed; }));
    keys.push_back(scalar_key<double>("train.grad_clip_norm", "global gradient-norm clip",
        [](TrainConfig& c) -> auto& { return c.grad_clip_norm; }));
    // clang-format on
    return keys;
}

const ConfigKey& find_key(const std::string& name) {
    for (const auto& k : config_keys()) {
        if (k.name == name) {
            return k;
        }
    }
    throw InputError("unknown config key '" + name + "'");
}

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, YAML::Node>>& out) {
    for (const auto& kv : node) {
        const auto key = prefix.empty() ? kv.first.as<std::string>() : prefix + "." + kv.first.as<std::string>();
        if (kv.second.IsMap()) {
            flatten(kv.second, key, out);
        } else {
            out.emplace_back(key, kv.second);
        }
    }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = make_keys();
    return keys;
}

std::string value_text(const ConfigKey& key, const TrainConfig& config) {
    YAML::Emitter e;
    e << YAML::Flow << key.get(config);
    return e.c_str();
}

TrainConfig config_from_yaml(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw InputError(std::string("malformed config: ") + e.what());
    }
    TrainConfig config;
    if (root.IsNull()) {
        return config;
    }
    if (!root.IsMap()) {
        throw InputError("malformed config: top level must be a mapping");
    }
    std::vector<std::pair<std::string, YAML::Node>> items;
    flatten(root, "", items);
    for (const auto& [key, value] : items) {
        find_key(key).set(config, value);
    }
    return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot read config: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_yaml(ss.str());
}

void apply_override(TrainConfig& config, const std::string& key, const std::string& value) {
    YAML::Node node;
    try {
        node = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw InputError("config key '" + key + "': cannot parse '" + value + "'");
    }
    find_key(key).set(config, node);
}

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& msg) { throw InputError("invalid config: " + msg); };
    if (!(c.learning_rate > 0.0)) fail("train.learning_rate must be > 0");
    if (!(c.weight_decay >= 0.0)) fail("train.weight_decay must be >= 0");
    if (!(c.grad_clip_norm > 0.0)) fail("train.grad_clip_norm must be > 0");
    if (c.batch_size <= 0) fail("train.batch_size must be > 0");
    if (c.epochs <= 0) fail("train.epochs must be > 0");
    if (c.max_steps < 0) fail("train.max_steps must be >= 0");
    if (c.base_size <= 0) fail("data.base_size must be > 0");
    if (c.scales.empty()) fail("train.scales must not be empty");
    for (const auto s : c.scales) {
        if (!(s > 0.0)) fail("train.scales entries must be > 0");
        scaled_size(c.base_size, s);
    }
    if (c.model.backbone != "toy" && c.model.backbone != "scripted") fail("model.backbone must be toy or scripted");
    if (c.model.width < 4) fail("model.width must be >= 4");
    if (c.model.cfp_dilations.empty()) fail("model.cfp_dilations must not be empty");
    if (c.model.sam_groups <= 0 || c.model.width % c.model.sam_groups != 0) {
        fail("model.width must be divisible by model.sam_groups");
    }
    if (c.model.cam_reduction <= 0 || c.model.width / c.model.cam_reduction < 1) {
        fail("model.cam_reduction leaves an empty attention bottleneck");
    }
    if (c.model.cfp_split && c.model.width % static_cast<int64_t>(c.model.cfp_dilations.size()) != 0) {
        fail("model.width must be divisible by the number of CFP dilations when model.cfp_split is set");
    }
}

std::string to_yaml(const TrainConfig& config) {
    // Group keys by section, keeping registry order.
    std::vector<std::string> sections;
    std::map<std::string, std::vector<const ConfigKey*>> by_section;
    for (const auto& k : config_keys()) {
        const auto dot = k.name.find('.');
        const auto section = k.name.substr(0, dot);
        if (!by_section.contains(section)) {
            sections.push_back(section);
        }
        by_section[section].push_back(&k);
    }
    YAML::Emitter e;
    e << YAML::BeginMap;
    for (const auto& section : sections) {
        e << YAML::Key << section << YAML::Value << YAML::BeginMap;
        for (const auto* k : by_section[section]) {
            e << YAML::Key << k->name.substr(section.size() + 1) << YAML::Value << k->get(config);
        }
        e << YAML::EndMap;
    }
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

std::string config_hash(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace segt
