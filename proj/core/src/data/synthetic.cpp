#include "thermoscope/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "thermoscope/data/manifest.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::data {

namespace {

struct Shape {
    std::string label;
    BoundingBox box;
};

// Smooth background field from a few random cosines.
struct Field {
    std::array<double, 4> fx{}, fy{}, phase{}, amp{};
    double operator()(double x, double y) const {
        double v = 0.0;
        for (std::size_t i = 0; i < 4; ++i) v += amp[i] * std::cos(fx[i] * x + fy[i] * y + phase[i]);
        return v;
    }
};

Field random_field(Rng& rng, double scale) {
    Field f;
    for (std::size_t i = 0; i < 4; ++i) {
        f.fx[i] = (uniform01(rng) - 0.5) * 0.3;
        f.fy[i] = (uniform01(rng) - 0.5) * 0.3;
        f.phase[i] = uniform01(rng) * 6.283185307179586;
        f.amp[i] = scale * (0.5 + 0.5 * uniform01(rng));
    }
    return f;
}

bool overlaps(const BoundingBox& a, const BoundingBox& b, double margin) {
    return !(a.x_max + margin <= b.x_min || b.x_max + margin <= a.x_min || a.y_max + margin <= b.y_min ||
             b.y_max + margin <= a.y_min);
}

std::array<double, 2> base_size(const std::string& label, double s) {
    if (label == "car") return {0.32 * s, 0.16 * s};
    if (label == "person") return {0.11 * s, 0.30 * s};
    if (label == "bicycle") return {0.26 * s, 0.15 * s};
    return {0.2 * s, 0.2 * s};
}

// Coverage of pixel (x, y) by the shape's silhouette, in [0, 1].
double coverage(const Shape& shape, int x, int y) {
    const double px = x + 0.5;
    const double py = y + 0.5;
    const BoundingBox& b = shape.box;
    if (px < b.x_min || px >= b.x_max || py < b.y_min || py >= b.y_max) return 0.0;
    if (shape.label == "bicycle") {
        // Two wheels (rings) joined by a frame bar.
        const double r = b.height() / 2.0;
        const double cy = b.y_min + r;
        const double thickness = std::max(1.2, 0.28 * r);
        for (double cx : {b.x_min + r, b.x_max - r}) {
            const double d = std::hypot(px - cx, py - cy);
            if (std::abs(d - (r - thickness / 2)) <= thickness / 2) return 1.0;
        }
        if (std::abs(py - cy) <= thickness / 2 && px >= b.x_min + r && px <= b.x_max - r) return 1.0;
        return 0.0;
    }
    if (shape.label == "person") {
        // Head on a body.
        const double head = b.width() / 2.0;
        const double hx = (b.x_min + b.x_max) / 2.0;
        if (py < b.y_min + 2 * head) return std::hypot(px - hx, py - (b.y_min + head)) <= head ? 1.0 : 0.0;
        return 1.0;
    }
    return 1.0;
}

}  // namespace

ToyFrame render_toy_frame(const ToyCorpusOptions& options, int index) {
    if (options.width < 32 || options.height < 32) throw ConfigError("toy frames must be at least 32x32");
    Rng rng(mix_seed(options.seed, "toy-frame-" + std::to_string(index)));
    const int w = options.width;
    const int h = options.height;
    const double s = std::min(w, h);

    std::vector<Shape> shapes;
    for (const auto& label : options.classes) {
        const auto base = base_size(label, s);
        for (int attempt = 0; attempt < 200; ++attempt) {
            const double u = 0.8 + 0.4 * uniform01(rng);
            const double bw = std::round(base[0] * u);
            const double bh = std::round(base[1] * u);
            const double x0 = std::round(1 + uniform01(rng) * (w - bw - 2));
            const double y0 = std::round(1 + uniform01(rng) * (h - bh - 2));
            BoundingBox box{x0, y0, x0 + bw, y0 + bh};
            const bool clash = std::any_of(shapes.begin(), shapes.end(),
                                           [&](const Shape& other) { return overlaps(box, other.box, 2.0); });
            if (!clash) {
                shapes.push_back({label, box});
                break;
            }
        }
    }

    ToyFrame frame;
    frame.thermal = Image::chw(3, h, w);
    frame.visible = Image::chw(3, h, w);

    const Field t_field = random_field(rng, 0.05);
    const Field v_field = random_field(rng, 0.08);
    const double v_tint[3] = {0.70 + 0.1 * uniform01(rng), 0.78 + 0.1 * uniform01(rng), 0.88 + 0.1 * uniform01(rng)};
    std::vector<double> t_heat;
    std::vector<std::array<double, 3>> v_color;
    for (const auto& sh : shapes) {
        const double jitter = 0.08 * (uniform01(rng) - 0.5);
        if (sh.label == "person") {
            t_heat.push_back(0.92 + jitter);
            v_color.push_back({0.12, 0.16, 0.45});
        } else if (sh.label == "car") {
            t_heat.push_back(0.72 + jitter);
            v_color.push_back({0.70, 0.12, 0.10});
        } else {
            t_heat.push_back(0.60 + jitter);
            v_color.push_back({0.10, 0.42, 0.15});
        }
    }

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double t = 0.16 + t_field(x, y) + 0.03 * (uniform01(rng) - 0.5);
            std::array<double, 3> v{};
            const double tex = v_field(x, y) + 0.06 * (uniform01(rng) - 0.5);
            for (int c = 0; c < 3; ++c) v[static_cast<std::size_t>(c)] = v_tint[c] + tex;
            for (std::size_t k = 0; k < shapes.size(); ++k) {
                const double a = coverage(shapes[k], x, y);
                if (a <= 0.0) continue;
                t = (1 - a) * t + a * (t_heat[k] + 0.04 * (uniform01(rng) - 0.5));
                for (std::size_t c = 0; c < 3; ++c) {
                    v[c] = (1 - a) * v[c] + a * (v_color[k][c] + 0.05 * (uniform01(rng) - 0.5));
                }
            }
            t = std::clamp(t, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                frame.thermal.at(c, y, x) = t;
                frame.visible.at(c, y, x) = std::clamp(v[static_cast<std::size_t>(c)], 0.0, 1.0);
            }
        }

    for (const auto& sh : shapes) frame.annotations.push_back({sh.box, sh.label, false});
    return frame;
}

ToyCorpus write_toy_corpus(const std::filesystem::path& out_dir, const ToyCorpusOptions& options) {
    if (options.frames < 1) throw ConfigError("toy corpus needs at least one frame");
    ToyCorpus corpus;
    corpus.paired.name = "toy-paired";
    corpus.paired.class_set = options.classes;
    for (int i = 0; i < options.frames; ++i) {
        char key[32];
        std::snprintf(key, sizeof key, "frame_%04d", i);
        ToyFrame frame = render_toy_frame(options, i);
        const auto t_path = out_dir / "thermal" / (std::string(key) + ".png");
        const auto v_path = out_dir / "visible" / (std::string(key) + ".png");
        save_png(t_path, frame.thermal);
        save_png(v_path, frame.visible);
        corpus.paired.records.push_back({std::string(key) + "_thermal", t_path.string(), options.width,
                                         options.height, Spectrum::thermal, frame.annotations, key});
        corpus.paired.records.push_back({std::string(key) + "_visible", v_path.string(), options.width,
                                         options.height, Spectrum::visible, frame.annotations, key});
    }
    corpus.paired = make_split(corpus.paired, options.train_fraction, options.seed);

    for (auto* m : {&corpus.thermal, &corpus.visible}) {
        const Spectrum want = m == &corpus.thermal ? Spectrum::thermal : Spectrum::visible;
        m->name = want == Spectrum::thermal ? "toy-thermal" : "toy-visible";
        m->class_set = options.classes;
        for (const auto& r : corpus.paired.records) {
            if (r.spectrum != want) continue;
            m->records.push_back(r);
            m->split[r.image_id] = corpus.paired.split.at(r.image_id);
        }
    }
    save_manifest(out_dir / "thermal.json", corpus.thermal);
    save_manifest(out_dir / "visible.json", corpus.visible);
    save_manifest(out_dir / "paired.json", corpus.paired);
    return corpus;
}

}  // namespace thermoscope::data
