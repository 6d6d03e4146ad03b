#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "thermoscope/data/ingest.hpp"
#include "thermoscope/data/manifest.hpp"
#include "thermoscope/data/synthetic.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/pipeline/pipelines.hpp"

namespace fs = std::filesystem;
using namespace thermoscope;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct PipelineArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

pipeline::PipelineConfig load_config(const PipelineArgs& args, pipeline::PipelineKind kind) {
    std::ifstream in(args.config);
    if (!in) throw ConfigError("cannot read config " + args.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + args.config + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + args.config + " must be a JSON object");
    if (!j.contains("pipeline")) {
        j["pipeline"] = pipeline::to_string(kind);
    } else if (j["pipeline"] != pipeline::to_string(kind)) {
        throw ConfigError("config " + args.config + " is for pipeline " + j["pipeline"].dump() + ", not " +
                          pipeline::to_string(kind));
    }
    auto config = pipeline::PipelineConfig::from_json(j, fs::absolute(args.config).parent_path());
    config.source_path = args.config;
    if (!args.out.empty()) config.output_dir = args.out;
    if (args.seed) config.seed = *args.seed;
    if (args.deterministic) config.deterministic = true;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thermal object detection through style consistency: pipelines and tools"};
    app.require_subcommand(1);

    std::vector<std::pair<CLI::App*, pipeline::PipelineKind>> pipelines;
    PipelineArgs args;
    const std::vector<std::pair<pipeline::PipelineKind, std::string>> kinds{
        {pipeline::PipelineKind::baseline, "train and test on thermal images"},
        {pipeline::PipelineKind::odsc, "train on visible-styled thermal images, test on thermal"},
        {pipeline::PipelineKind::sanity_swap, "thermal-trained detector tested on styled images"},
        {pipeline::PipelineKind::cdmt, "visible-trained detector tested on thermal, without and with style"},
        {pipeline::PipelineKind::weak_label, "pseudo-label an unlabeled thermal image directory"},
        {pipeline::PipelineKind::bench, "inference frames per second"},
        {pipeline::PipelineKind::style_train, "train the style transfer network"},
        {pipeline::PipelineKind::stylize, "stylize a dataset with a trained style network"},
        {pipeline::PipelineKind::eval, "score a detector or a detections file against a manifest"}};
    for (const auto& [kind, help] : kinds) {
        CLI::App* sub = app.add_subcommand(pipeline::to_string(kind), help);
        sub->add_option("--config", args.config, "JSON run config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory (overrides output_dir)");
        sub->add_option("--seed", args.seed, "seed (overrides seed)");
        sub->add_flag("--deterministic", args.deterministic, "force deterministic mode");
        pipelines.emplace_back(sub, kind);
    }

    data::ToyCorpusOptions toy;
    std::string toy_out;
    CLI::App* toy_cmd = app.add_subcommand("toy-corpus", "write the synthetic thermal/visible corpus");
    toy_cmd->add_option("--out", toy_out, "output directory")->required();
    toy_cmd->add_option("--frames", toy.frames, "number of frames")->check(CLI::PositiveNumber);
    toy_cmd->add_option("--size", toy.width, "frame side in pixels")->check(CLI::Range(32, 4096));
    toy_cmd->add_option("--fraction", toy.train_fraction, "train fraction")->check(CLI::Range(0.0, 1.0));
    toy_cmd->add_option("--seed", toy.seed, "seed");

    std::string format, source, manifest_out;
    std::uint64_t split_seed = 0;
    CLI::App* ingest_cmd = app.add_subcommand("ingest", "convert a FLIR or KAIST tree into manifests");
    ingest_cmd->add_option("--format", format, "flir or kaist")->required()->check(CLI::IsMember({"flir", "kaist"}));
    ingest_cmd->add_option("--source", source, "dataset root")->required()->check(CLI::ExistingDirectory);
    ingest_cmd->add_option("--out", manifest_out, "output manifest (.json)")->required();
    ingest_cmd->add_option("--seed", split_seed, "seed for the fallback split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        for (const auto& [sub, kind] : pipelines) {
            if (!sub->parsed()) continue;
            const auto config = load_config(args, kind);
            const auto records = pipeline::run_pipeline(config, &std::cerr);
            std::cout << pipeline::summarize(records);
            std::cout << "run artifacts in " << config.output_dir.string() << '\n';
            return 0;
        }
        if (toy_cmd->parsed()) {
            toy.height = toy.width;
            const auto corpus = data::write_toy_corpus(toy_out, toy);
            std::cout << "wrote " << corpus.paired.records.size() << " images to " << toy_out
                      << " (thermal.json, visible.json, paired.json)\n";
            return 0;
        }
        if (ingest_cmd->parsed()) {
            data::IngestResult result;
            if (format == "flir") {
                data::FlirOptions o;
                o.split_seed = split_seed;
                result = data::parse_flir_annotations(source, o);
            } else {
                data::KaistOptions o;
                o.split_seed = split_seed;
                result = data::parse_kaist_annotations(source, o);
            }
            data::save_manifest(manifest_out, result.manifest);
            const auto& r = result.report;
            std::cout << "wrote " << result.manifest.records.size() << " records to " << manifest_out << '\n'
                      << "dropped dog annotations: " << r.dropped_dog
                      << ", unknown classes skipped: " << r.skipped_unknown_class
                      << ", boxes clipped: " << r.clipped_boxes
                      << ", degenerate boxes dropped: " << r.dropped_degenerate_boxes << '\n';
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
