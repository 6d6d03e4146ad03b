#include "thermoscope/training/style_train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "thermoscope/error.hpp"
#include "thermoscope/nn/adam.hpp"
#include "thermoscope/random.hpp"
#include "thermoscope/style/objective.hpp"

namespace thermoscope::training {

using nlohmann::json;

void StyleTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("style training: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("style training: batch_size must be >= 1");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
        throw ConfigError("style training: learning_rate must be > 0");
    }
    if (style_sizes.empty()) throw ConfigError("style training: style_sizes must not be empty");
    for (int s : style_sizes) {
        if (s < style::LossNetwork::kMinInputSize) {
            throw ConfigError("style training: style size " + std::to_string(s) + " is below the minimum of " +
                              std::to_string(style::LossNetwork::kMinInputSize));
        }
    }
    if (content_size < style::LossNetwork::kMinInputSize) {
        throw ConfigError("style training: content_size " + std::to_string(content_size) + " is below the minimum of " +
                          std::to_string(style::LossNetwork::kMinInputSize));
    }
    if (generator.channels < 1 || generator.residual_blocks < 0) {
        throw ConfigError("style training: invalid generator architecture");
    }
    try {
        style::check_loss_weights(loss_weights);
    } catch (const Error& e) {
        throw ConfigError(std::string("style training: ") + e.what());
    }
}

json StyleTrainConfig::snapshot() const {
    return {{"content_manifest", {{"name", content_manifest.name}, {"records", content_manifest.records.size()}}},
            {"style_manifest", {{"name", style_manifest.name}, {"records", style_manifest.records.size()}}},
            {"epochs", epochs},
            {"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"style_sizes", style_sizes},
            {"content_size", content_size},
            {"loss_weights", {{"content", loss_weights.content}, {"style", loss_weights.style}, {"tv", loss_weights.tv}}},
            {"seed", seed},
            {"generator", generator.to_json()},
            {"deterministic", deterministic}};
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

}  // namespace

StyleTrainConfig StyleTrainConfig::from_json(const json& j) {
    const std::string where = "style.train";
    reject_unknown(j, {"epochs", "batch_size", "learning_rate", "style_sizes", "content_size", "loss_weights", "seed",
                       "generator", "deterministic"},
                   where);
    StyleTrainConfig c;
    read_opt(j, "epochs", c.epochs, where);
    read_opt(j, "batch_size", c.batch_size, where);
    read_opt(j, "learning_rate", c.learning_rate, where);
    read_opt(j, "style_sizes", c.style_sizes, where);
    read_opt(j, "content_size", c.content_size, where);
    read_opt(j, "seed", c.seed, where);
    read_opt(j, "deterministic", c.deterministic, where);
    if (j.contains("loss_weights")) {
        const json& w = j.at("loss_weights");
        reject_unknown(w, {"content", "style", "tv"}, where + ".loss_weights");
        read_opt(w, "content", c.loss_weights.content, where + ".loss_weights");
        read_opt(w, "style", c.loss_weights.style, where + ".loss_weights");
        read_opt(w, "tv", c.loss_weights.tv, where + ".loss_weights");
    }
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        reject_unknown(g, {"channels", "residual_blocks"}, where + ".generator");
        read_opt(g, "channels", c.generator.channels, where + ".generator");
        read_opt(g, "residual_blocks", c.generator.residual_blocks, where + ".generator");
    }
    c.validate();
    return c;
}

void TrainLog::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write train log " + path.string());
    for (const auto& e : entries) {
        out << json{{"iter", e.iteration}, {"total", e.total},         {"content", e.content}, {"style", e.style},
                    {"tv", e.tv},          {"style_size", e.style_size}, {"t", e.t}}
                   .dump()
            << '\n';
    }
    if (!out) throw IoError("failed writing train log " + path.string());
}

std::vector<LossRecord> TrainLog::history() const {
    std::vector<LossRecord> h;
    h.reserve(entries.size());
    for (const auto& e : entries) h.push_back({e.iteration, e.total, e.content, e.style, e.tv});
    return h;
}

namespace {

// Content-side features never change during training; keep them unless the
// corpus is too large to hold.
constexpr std::size_t kContentCacheBudget = std::size_t{1} << 29;  // bytes
constexpr std::size_t kStyleCacheEntries = 256;

struct ContentEntry {
    Image aligned;
    style::FeatureMap features;
};

}  // namespace

StyleTrainResult train_msgnet_images(const StyleTrainConfig& config, const std::vector<Image>& content_images,
                                     const std::vector<Image>& style_images, const style::LossNetwork& network) {
    config.validate();
    if (content_images.empty()) throw ValidationError("style training: no readable content images");
    if (style_images.empty()) throw ValidationError("style training: no readable style images");
    for (const auto& img : content_images) {
        check_image(img, "content image");
        if (img.height() != config.content_size || img.width() != config.content_size) {
            throw DimensionError("style training: content images must be " + std::to_string(config.content_size) +
                                 "x" + std::to_string(config.content_size));
        }
    }
    for (const auto& img : style_images) check_image(img, "style image");

    const SeedStreams streams(config.seed);
    style::Generator generator = style::Generator::create(config.generator, streams.derive("generator-init"));
    nn::Adam adam({config.learning_rate, 0.9, 0.999, 1e-8});
    Rng order_rng = streams.stream("content-order");
    Rng style_rng = streams.stream("style");

    const std::size_t n = content_images.size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t iterations_per_epoch = (n + batch - 1) / batch;

    const std::size_t content_bytes = n * config.content_size * config.content_size * sizeof(double) * (3 + 256 / 16);
    const bool cache_content = content_bytes <= kContentCacheBudget;
    std::map<std::size_t, ContentEntry> content_cache;
    auto content_entry = [&](std::size_t i) -> ContentEntry {
        if (auto it = content_cache.find(i); it != content_cache.end()) return it->second;
        ContentEntry e;
        e.aligned = style::align_image(content_images[i]);
        e.features = network.extract(e.aligned).content();
        if (cache_content) content_cache.emplace(i, e);
        return e;
    };

    struct StyleEntry {
        Image resized;
        std::vector<style::GramMatrix> grams;
    };
    std::map<std::pair<std::size_t, int>, StyleEntry> style_cache;
    auto style_entry = [&](std::size_t i, int size) -> const StyleEntry& {
        const auto key = std::make_pair(i, size);
        if (auto it = style_cache.find(key); it != style_cache.end()) return it->second;
        if (style_cache.size() >= kStyleCacheEntries) style_cache.clear();
        StyleEntry e;
        e.resized = resize_bilinear(style_images[i], size, size);
        e.grams = style::set_style_targets(e.resized, network).grams;
        return style_cache.emplace(key, std::move(e)).first->second;
    };

    StyleTrainResult result;
    const auto start = std::chrono::steady_clock::now();
    long iteration = 0;
    std::vector<std::size_t> order(n);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, order_rng);
        for (std::size_t b = 0; b < iterations_per_epoch; ++b) {
            ++iteration;
            const int size = config.style_sizes[static_cast<std::size_t>(iteration - 1) % config.style_sizes.size()];
            const std::size_t style_index = uniform_index(style_rng, style_images.size());
            const StyleEntry& se = style_entry(style_index, size);
            style::StyleTargets targets;
            targets.grams = se.grams;
            targets.comatch_target = generator.style_gram(se.resized);

            const std::size_t first = b * batch;
            const std::size_t last = std::min(n, first + batch);
            const double scale = 1.0 / static_cast<double>(last - first);
            nn::zero_grads(generator.parameters());
            style::ObjectiveTerms mean;
            for (std::size_t k = first; k < last; ++k) {
                const ContentEntry ce = content_entry(order[k]);
                const auto terms = style::accumulate_objective_gradient(ce.aligned, ce.features, targets, generator,
                                                                        config.loss_weights, network, scale);
                mean.total += terms.total * scale;
                mean.content += terms.content * scale;
                mean.style += terms.style * scale;
                mean.tv += terms.tv * scale;
            }
            if (!std::isfinite(mean.total)) {
                throw NumericError("style training: non-finite loss at iteration " + std::to_string(iteration) +
                                   " (epoch " + std::to_string(epoch) + ")");
            }
            adam.step(generator.parameters());

            const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            result.log.entries.push_back({iteration, mean.total, mean.content, mean.style, mean.tv, size, t});
        }
    }

    result.checkpoint.generator = std::move(generator);
    result.checkpoint.config = config.snapshot();
    result.checkpoint.epoch = config.epochs;
    result.checkpoint.history = result.log.history();
    return result;
}

namespace {

std::vector<Image> load_readable(const data::DatasetManifest& manifest, int size, TrainLog& log) {
    std::vector<Image> images;
    for (const auto& r : manifest.records) {
        try {
            Image img = load_image(r.path);
            images.push_back(size > 0 ? resize_bilinear(img, size, size) : std::move(img));
        } catch (const Error& e) {
            ++log.skipped_images;
            log.warnings.push_back("skipped unreadable image " + r.path + ": " + e.what());
        }
    }
    return images;
}

}  // namespace

StyleTrainResult train_msgnet(const StyleTrainConfig& config, const style::LossNetwork& network) {
    config.validate();
    if (config.content_manifest.records.empty()) throw ValidationError("style training: content manifest is empty");
    if (config.style_manifest.records.empty()) throw ValidationError("style training: style manifest is empty");
    TrainLog loading;
    const auto contents = load_readable(config.content_manifest, config.content_size, loading);
    const auto styles = load_readable(config.style_manifest, 0, loading);
    StyleTrainResult result = train_msgnet_images(config, contents, styles, network);
    result.log.skipped_images = loading.skipped_images;
    result.log.warnings = std::move(loading.warnings);
    return result;
}

}  // namespace thermoscope::training
