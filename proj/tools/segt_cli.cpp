// segt: train, evaluate and run the SegT polyp segmentation network.

#include "segt/checkpoint.hpp"
#include "segt/config.hpp"
#include "segt/data.hpp"
#include "segt/error.hpp"
#include "segt/image_io.hpp"
#include "segt/metrics.hpp"
#include "segt/synthetic.hpp"
#include "segt/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string timestamp() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                     std::chrono::system_clock::now())));
}

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string resolved_config;
    fs::path out_dir;
    std::string started = timestamp();

    void write(std::string_view status) const {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "manifest.txt");
        out << "command: " << command << '\n'
            << "config_path: " << (config_path.empty() ? "-" : config_path) << '\n'
            << "config_hash: " << (resolved_config.empty() ? "-" : segt::config_hash(resolved_config)) << '\n'
            << "output_dir: " << out_dir.string() << '\n'
            << "started: " << started << '\n'
            << "finished: " << timestamp() << '\n'
            << "version: " << SEGT_VERSION << '\n'
            << "status: " << status << '\n';
        if (!resolved_config.empty()) {
            out << "--- resolved config ---\n" << resolved_config;
        }
    }
};

std::string config_key_table() {
    const segt::TrainConfig defaults;
    std::string table = "Config keys (YAML sections; override with --<key>=<value>):\n";
    for (const auto& k : segt::config_keys()) {
        table += fmt::format("  {:<22} {:<18} {}\n", k.name, segt::value_text(k, defaults), k.help);
    }
    return table;
}

// Runs `body` and maps its errors to exit codes; the outcome goes in the manifest.
template <typename Body>
int run_command(RunManifest& manifest, Body&& body) {
    try {
        body();
        manifest.write("ok");
        return kExitOk;
    } catch (const segt::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        fs::create_directories(manifest.out_dir);
        std::ofstream(manifest.out_dir / "failure.txt") << e.what() << '\n';
        manifest.write("numerical failure");
        return kExitNumerical;
    } catch (const segt::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (!manifest.out_dir.empty()) {
            manifest.write(std::string("input error: ") + e.what());
        }
        return kExitInput;
    } catch (const c10::Error& e) {
        std::cerr << "error: " << e.what_without_backtrace() << '\n';
        if (!manifest.out_dir.empty()) {
            manifest.write("tensor error");
        }
        return kExitInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SegT polyp segmentation: train, evaluate, predict"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SEGT_VERSION);
    const auto footer = config_key_table();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model from a YAML config");
    std::string train_config;
    std::string train_out;
    std::map<std::string, std::string> overrides;
    train_cmd->add_option("--config", train_config, "YAML config file")->required();
    train_cmd->add_option("--out", train_out, "output directory")->required();
    {
        const segt::TrainConfig defaults;
        for (const auto& k : segt::config_keys()) {
            train_cmd->add_option("--" + k.name, overrides[k.name],
                                  fmt::format("{} [default: {}]", k.help, segt::value_text(k, defaults)));
        }
    }
    train_cmd->footer(footer);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset (mDice, mIoU, MAE)");
    std::string eval_ckpt;
    std::string eval_data;
    std::string eval_out;
    std::string eval_manifest;
    double eval_threshold = 0.5;
    int64_t eval_size = 0;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "dataset root with images/ and masks/")->required();
    eval_cmd->add_option("--out", eval_out, "output directory")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "optional split manifest");
    eval_cmd->add_option("--threshold", eval_threshold, "binarization threshold")->capture_default_str();
    eval_cmd->add_option("--size", eval_size, "evaluation resolution (0: data.base_size of the checkpoint)")
        ->capture_default_str();
    eval_cmd->footer(footer);

    // prepare-edges
    auto* edges_cmd = app.add_subcommand("prepare-edges", "write derived edge maps to <data>/edges for inspection");
    std::string edges_data;
    edges_cmd->add_option("--data", edges_data, "dataset root with masks/")->required();
    edges_cmd->footer(footer);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "predict one image: probability map, mask, overlay");
    std::string predict_ckpt;
    std::string predict_image;
    std::string predict_out;
    double predict_threshold = 0.5;
    predict_cmd->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
    predict_cmd->add_option("--image", predict_image, "input image")->required();
    predict_cmd->add_option("--out", predict_out, "output directory")->required();
    predict_cmd->add_option("--threshold", predict_threshold, "binarization threshold")->capture_default_str();
    predict_cmd->footer(footer);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write a procedural polyp-like dataset");
    std::string synth_out;
    std::size_t synth_count = 8;
    int64_t synth_size = 128;
    uint64_t synth_seed = 0;
    synth_cmd->add_option("--out", synth_out, "dataset root to create")->required();
    synth_cmd->add_option("--count", synth_count, "number of samples")->capture_default_str();
    synth_cmd->add_option("--size", synth_size, "square image size")->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth_cmd->footer(footer);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (train_cmd->parsed()) {
        RunManifest manifest{"train", train_config, {}, train_out};
        return run_command(manifest, [&] {
            auto config = segt::load_config(train_config);
            for (const auto& k : segt::config_keys()) {
                if (train_cmd->count("--" + k.name) > 0) {
                    segt::apply_override(config, k.name, overrides[k.name]);
                }
            }
            segt::validate(config);
            manifest.resolved_config = segt::to_yaml(config);
            if (config.train_root.empty()) {
                throw segt::InputError("data.train_root is not set");
            }
            std::optional<fs::path> split_manifest;
            if (!config.manifest.empty()) {
                split_manifest = config.manifest;
            }
            const auto split =
                segt::load_dataset(config.train_root, {config.base_size, config.base_size}, split_manifest);
            std::cout << fmt::format("training on {} samples from {}\n", split.size(), config.train_root);
            fs::create_directories(train_out);
            const auto result = segt::train(config, split, [](const segt::StepLog& s) {
                if (s.step == 1 || s.step % 10 == 0) {
                    std::cout << fmt::format("step {:>5}  epoch {:>3}  scale {:.2f}  total {:.5f}\n", s.step, s.epoch,
                                             s.scale, s.losses[6]);
                }
            });
            segt::save_checkpoint(result.checkpoint, fs::path(train_out) / "checkpoint.segt");
            segt::write_loss_log(result.log, fs::path(train_out) / "loss_log.csv");
            std::cout << fmt::format("wrote {} after {} steps\n", (fs::path(train_out) / "checkpoint.segt").string(),
                                     result.checkpoint.step);
        });
    }

    if (eval_cmd->parsed()) {
        RunManifest manifest{"eval", {}, {}, eval_out};
        return run_command(manifest, [&] {
            const auto ckpt = segt::load_checkpoint(eval_ckpt);
            manifest.resolved_config = ckpt.config_yaml;
            const auto config = segt::config_from_yaml(ckpt.config_yaml);
            auto model = segt::model_from_checkpoint(ckpt);
            const auto size = eval_size > 0 ? eval_size : config.base_size;
            std::optional<fs::path> split_manifest;
            if (!eval_manifest.empty()) {
                split_manifest = eval_manifest;
            }
            const auto split = segt::load_dataset(eval_data, {size, size}, split_manifest);
            const auto report = segt::evaluate(*model, split, eval_threshold);
            fs::create_directories(eval_out);
            segt::write_report_csv(report, fs::path(eval_out) / "metrics.csv");
            const auto summary = segt::format_summary(report);
            std::ofstream(fs::path(eval_out) / "summary.txt") << summary;
            std::cout << summary;
        });
    }

    if (edges_cmd->parsed()) {
        const auto out_dir = fs::path(edges_data) / "edges";
        RunManifest manifest{"prepare-edges", {}, {}, out_dir};
        return run_command(manifest, [&] {
            const auto masks_dir = fs::path(edges_data) / "masks";
            if (!fs::is_directory(masks_dir)) {
                throw segt::InputError("missing directory: " + masks_dir.string());
            }
            fs::create_directories(out_dir);
            std::size_t count = 0;
            for (const auto& entry : fs::directory_iterator(masks_dir)) {
                if (!entry.is_regular_file()) {
                    continue;
                }
                const auto mask = segt::read_mask(entry.path());
                segt::write_gray(out_dir / (entry.path().stem().string() + ".png"), segt::make_edge_ground_truth(mask));
                ++count;
            }
            std::cout << fmt::format("wrote {} edge maps to {}\n", count, out_dir.string());
        });
    }

    if (predict_cmd->parsed()) {
        RunManifest manifest{"predict", {}, {}, predict_out};
        return run_command(manifest, [&] {
            const auto ckpt = segt::load_checkpoint(predict_ckpt);
            manifest.resolved_config = ckpt.config_yaml;
            auto model = segt::model_from_checkpoint(ckpt);
            const auto image = segt::read_image(predict_image);
            const auto prediction = segt::predict(*model, image, predict_threshold);
            segt::write_prediction(prediction, predict_out, fs::path(predict_image).stem().string());
            std::cout << fmt::format("foreground fraction {:.4f}\n", prediction.mask.mean().item<double>());
        });
    }

    if (synth_cmd->parsed()) {
        RunManifest manifest{"synth", {}, {}, synth_out};
        return run_command(manifest, [&] {
            segt::write_synthetic_dataset(synth_out, synth_count, synth_size, synth_seed);
            std::cout << fmt::format("wrote {} samples to {}\n", synth_count, synth_out);
        });
    }
    return kExitOk;
}
