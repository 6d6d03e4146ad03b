#include "thermoscope/training/stylize.hpp"

#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <thread>

#include "thermoscope/error.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::training {

Image stylize_image(const Image& content_image, const Image& style_image, const Checkpoint& checkpoint) {
    check_image(style_image, "style image");
    style::StyleTargets targets;
    targets.comatch_target = checkpoint.generator.style_gram(style_image);
    return style::generator_forward(content_image, checkpoint.generator, targets);
}

std::size_t assign_style(std::uint64_t seed, const std::string& image_id, std::size_t style_count) {
    if (style_count == 0) throw ValidationError("stylize: style source is empty");
    Rng rng(mix_seed(seed, "stylize:" + image_id));
    return uniform_index(rng, style_count);
}

std::string sanitize_id(const std::string& image_id) {
    std::string out;
    out.reserve(image_id.size());
    for (unsigned char ch : image_id) {
        const bool keep = std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.';
        out.push_back(keep ? static_cast<char>(ch) : '_');
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

StylizeResult stylize_dataset(const data::DatasetManifest& manifest, const data::DatasetManifest& style_source,
                              const Checkpoint& checkpoint, const std::filesystem::path& out_dir, std::uint64_t seed,
                              const StylizeOptions& options) {
    if (style_source.records.empty()) throw ValidationError("stylize: style source is empty");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    StylizeResult result;
    result.manifest = manifest;
    result.manifest.name = manifest.name + "+styled";

    // Distinct sanitized names are required or files would overwrite each other.
    std::map<std::string, std::string> taken;
    for (const auto& r : manifest.records) {
        const auto [it, fresh] = taken.emplace(sanitize_id(r.image_id), r.image_id);
        if (!fresh) {
            throw ValidationError("stylize: image ids '" + it->second + "' and '" + r.image_id +
                                  "' map to the same file name");
        }
    }

    std::vector<std::size_t> style_of(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        style_of[i] = assign_style(seed, manifest.records[i].image_id, style_source.records.size());
        result.assignments[manifest.records[i].image_id] = style_source.records[style_of[i]].image_id;
    }

    std::mutex target_mutex;
    std::map<std::size_t, Tensor> target_cache;
    auto comatch_target = [&](std::size_t s) {
        {
            std::lock_guard lock(target_mutex);
            if (auto it = target_cache.find(s); it != target_cache.end()) return it->second;
        }
        Image img = load_image(style_source.records[s].path);
        if (options.style_size > 0) img = resize_bilinear(img, options.style_size, options.style_size);
        Tensor t = checkpoint.generator.style_gram(img);
        std::lock_guard lock(target_mutex);
        return target_cache.emplace(s, std::move(t)).first->second;
    };

    auto process = [&](std::size_t i) {
        auto& record = result.manifest.records[i];
        const Image content = load_image(record.path);
        if (content.width() != record.width || content.height() != record.height) {
            throw ValidationError("stylize: " + record.path + " is " + std::to_string(content.width()) + "x" +
                                  std::to_string(content.height()) + " but the manifest says " +
                                  std::to_string(record.width) + "x" + std::to_string(record.height));
        }
        style::StyleTargets targets;
        targets.comatch_target = comatch_target(style_of[i]);
        const Image styled = style::generator_forward(content, checkpoint.generator, targets);
        const auto path = out_dir / (sanitize_id(record.image_id) + ".png");
        save_png(path, styled);
        record.path = path.string();
    };

    const std::size_t n = manifest.records.size();
    const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(n);
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        process(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        // Report the first failure in record order.
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    data::validate(result.manifest);
    return result;
}

}  // namespace thermoscope::training
