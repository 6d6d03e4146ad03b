#include "thermoscope/detection/reference_mini.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "thermoscope/container.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/nn/adam.hpp"
#include "thermoscope/nn/kernels.hpp"
#include "thermoscope/nn/ops.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::detection {

namespace {

constexpr double kBackgroundBias = 4.0;
constexpr double kPredictorStd = 0.01;
constexpr int kHeadChannels = 96;

struct LayerDef {
    const char* name;
    int in, out, stride;
};

const std::vector<LayerDef>& backbone_layers() {
    static const std::vector<LayerDef> layers{{"conv1", 3, 16, 2},
                                              {"conv2", 16, 32, 2},
                                              {"conv3", 32, 64, 2},
                                              {"conv4", 64, kHeadChannels, 1},
                                              {"head", kHeadChannels, kHeadChannels, 1}};
    return layers;
}

int grid_size(int input_size) {
    int s = input_size;
    for (const auto& l : backbone_layers()) s = nn::kernels::conv_output_size(s, 3, {l.stride, 1});
    return s;
}

double log_sum_exp(const double* row, int k) {
    const double m = *std::max_element(row, row + k);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::exp(row[i] - m);
    return m + std::log(s);
}

// (A*K, G, G) map -> (N, K) rows with n = (y*G + x)*A + a.
Tensor map_to_rows(const Tensor& map, int per_cell, int k) {
    const int gh = map.height();
    const int gw = map.width();
    Tensor rows({gh * gw * per_cell, k});
    for (int y = 0; y < gh; ++y) {
        for (int x = 0; x < gw; ++x) {
            for (int a = 0; a < per_cell; ++a) {
                const std::size_t n = (static_cast<std::size_t>(y) * gw + x) * per_cell + a;
                for (int c = 0; c < k; ++c) rows[n * k + c] = map.at(a * k + c, y, x);
            }
        }
    }
    return rows;
}

void add_rows_to_map(const Tensor& rows, int per_cell, int k, double scale, Tensor& map) {
    const int gh = map.height();
    const int gw = map.width();
    for (int y = 0; y < gh; ++y) {
        for (int x = 0; x < gw; ++x) {
            for (int a = 0; a < per_cell; ++a) {
                const std::size_t n = (static_cast<std::size_t>(y) * gw + x) * per_cell + a;
                for (int c = 0; c < k; ++c) map.at(a * k + c, y, x) += scale * rows[n * k + c];
            }
        }
    }
}

}  // namespace

MultiboxLoss multibox_loss(const Tensor& logits, const Tensor& offsets, const std::vector<BoundingBox>& anchors,
                           const std::vector<BoundingBox>& gt_boxes, const std::vector<int>& labels) {
    if (logits.rank() != 2 || offsets.rank() != 2 || offsets.dim(1) != 4 ||
        static_cast<std::size_t>(logits.dim(0)) != anchors.size() || offsets.dim(0) != logits.dim(0)) {
        throw DimensionError("multibox_loss: logits " + shape_string(logits.shape()) + " / offsets " +
                             shape_string(offsets.shape()) + " do not fit " + std::to_string(anchors.size()) +
                             " anchors");
    }
    if (gt_boxes.size() != labels.size()) throw DimensionError("multibox_loss: boxes and labels differ in length");
    const int k = logits.dim(1);
    for (int label : labels) {
        if (label < 1 || label >= k) throw ValidationError("multibox_loss: label index out of range");
    }
    const std::size_t n = anchors.size();
    const std::vector<int> assigned = match_anchors(anchors, gt_boxes);

    MultiboxLoss out;
    out.d_logits = Tensor(logits.shape());
    out.d_offsets = Tensor(offsets.shape());
    std::vector<double> lse(n);
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < n; ++i) {
        lse[i] = log_sum_exp(logits.data() + i * k, k);
        if (assigned[i] >= 0) {
            ++out.positives;
        } else {
            negatives.push_back(i);
        }
    }
    const std::size_t keep_neg =
        std::min(negatives.size(), static_cast<std::size_t>(kNegativesPerPositive * std::max(out.positives, 1)));
    // Hardest negatives: highest background cross-entropy, ties by index.
    std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
        return lse[a] - logits[a * k] > lse[b] - logits[b * k];
    });
    negatives.resize(keep_neg);

    const double norm = 1.0 / std::max(out.positives, 1);
    auto add_ce = [&](std::size_t i, int target) {
        out.classification += lse[i] - logits[i * k + target];
        for (int c = 0; c < k; ++c) {
            const double p = std::exp(logits[i * k + c] - lse[i]);
            out.d_logits[i * k + c] += norm * (p - (c == target ? 1.0 : 0.0));
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i] < 0) continue;
        const auto g = static_cast<std::size_t>(assigned[i]);
        add_ce(i, labels[g]);
        const BoxOffsets t = encode_box(gt_boxes[g], anchors[i]);
        for (int j = 0; j < 4; ++j) {
            const double d = offsets[i * 4 + j] - t[static_cast<std::size_t>(j)];
            const double ad = std::abs(d);
            out.localization += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
            out.d_offsets[i * 4 + j] = norm * std::clamp(d, -1.0, 1.0);
        }
    }
    for (std::size_t i : negatives) add_ce(i, 0);
    out.classification *= norm;
    out.localization *= norm;
    out.value = out.classification + out.localization;
    return out;
}

const AnchorLayout& ReferenceMini::anchor_layout() {
    static const AnchorLayout layout{{0.12, 0.22, 0.35}, {0.4, 1.0, 2.5}};
    return layout;
}

ReferenceMini ReferenceMini::create(const DetectorSpec& spec) {
    spec.validate();
    if (spec.architecture != Architecture::reference_mini) {
        throw ConfigError("ReferenceMini cannot host " + to_string(spec.architecture));
    }
    ReferenceMini m;
    m.spec_ = spec;
    m.grid_ = grid_size(spec.input_size);
    m.anchors_ = make_anchors(spec.input_size, m.grid_, m.grid_, anchor_layout());

    Rng rng = SeedStreams(spec.seed).stream("detector-init");
    for (const auto& l : backbone_layers()) {
        m.params_.emplace_back(std::string(l.name) + ".weight", nn::he_normal({l.out, l.in, 3, 3}, rng));
        m.params_.emplace_back(std::string(l.name) + ".bias", Tensor({l.out}, 0.0));
    }
    const int a = anchor_layout().per_cell();
    const int k = m.num_classes() + 1;
    auto predictor = [&](const std::string& name, int out) {
        Tensor w({out, kHeadChannels, 3, 3});
        for (double& v : w.values()) v = normal(rng) * kPredictorStd;
        m.params_.emplace_back(name + ".weight", std::move(w));
        m.params_.emplace_back(name + ".bias", Tensor({out}, 0.0));
    };
    predictor("cls", a * k);
    predictor("reg", a * 4);
    Tensor& cls_bias = nn::find_parameter(m.params_, "cls.bias").value;
    for (int i = 0; i < a; ++i) cls_bias[static_cast<std::size_t>(i * k)] = kBackgroundBias;
    return m;
}

ReferenceMini ReferenceMini::from_parameters(const DetectorSpec& spec, nn::ParameterList params) {
    ReferenceMini m = create(spec);
    if (params.size() != m.params_.size()) throw IoError("reference-mini parameter count does not match the detector spec");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != m.params_[i].name || !params[i].value.same_shape(m.params_[i].value)) {
            throw IoError("reference-mini parameter '" + params[i].name + "' does not match the detector spec");
        }
        if (!params[i].value.all_finite()) throw NumericError("parameter '" + params[i].name + "' is not finite");
        params[i].grad = Tensor(params[i].value.shape());
    }
    m.params_ = std::move(params);
    return m;
}

Image ReferenceMini::preprocess(const Image& image) const {
    check_image(image, "detector input");
    const int s = spec_.input_size;
    if (image.height() == s && image.width() == s) return image;
    return resize_bilinear(image, s, s);
}

template <class Bind>
std::pair<nn::Var, nn::Var> ReferenceMini::build(nn::Graph& g, nn::Var x, Bind&& bind) const {
    x = nn::channel_normalize(g, x, {0.5, 0.5, 0.5}, {0.25, 0.25, 0.25});
    for (const auto& l : backbone_layers()) {
        const std::string name = l.name;
        x = nn::relu(g, nn::conv2d(g, x, bind(name + ".weight"), bind(name + ".bias"), l.stride, 1));
    }
    const nn::Var cls = nn::conv2d(g, x, bind("cls.weight"), bind("cls.bias"), 1, 1);
    const nn::Var reg = nn::conv2d(g, x, bind("reg.weight"), bind("reg.bias"), 1, 1);
    return {cls, reg};
}

ReferenceMini::HeadOutput ReferenceMini::predict(const Image& input) const {
    nn::Graph g(false);
    const auto [cls, reg] = build(g, g.input(input), [&](const std::string& name) {
        return g.constant(nn::find_parameter(params_, name).value);
    });
    const int a = anchor_layout().per_cell();
    return {map_to_rows(g.value(cls), a, num_classes() + 1), map_to_rows(g.value(reg), a, 4)};
}

MultiboxLoss ReferenceMini::accumulate_gradient(const Image& input, const std::vector<BoundingBox>& gt_boxes,
                                                const std::vector<int>& labels, double grad_scale) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < params_.size(); ++i) index[params_[i].name] = i;
    nn::Graph g(true);
    const auto [cls, reg] =
        build(g, g.input(input), [&](const std::string& name) { return g.parameter(params_.at(index.at(name))); });
    const int a = anchor_layout().per_cell();
    const int k = num_classes() + 1;
    MultiboxLoss loss = multibox_loss(map_to_rows(g.value(cls), a, k), map_to_rows(g.value(reg), a, 4), anchors_,
                                      gt_boxes, labels);
    const Tensor d_logits = loss.d_logits;
    const Tensor d_offsets = loss.d_offsets;
    const nn::Var total =
        g.emit(Tensor::scalar(loss.value), true, [cls, reg, d_logits, d_offsets, a, k](nn::Graph& gr, const Tensor& go) {
            add_rows_to_map(d_logits, a, k, go[0], gr.grad_mut(cls));
            add_rows_to_map(d_offsets, a, 4, go[0], gr.grad_mut(reg));
        });
    g.backward(total, grad_scale);
    return loss;
}

std::vector<Detection> ReferenceMini::detect(const Image& input, const std::string& image_id, int image_width,
                                             int image_height, double score_threshold) const {
    const HeadOutput head = predict(input);
    const int k = num_classes() + 1;
    const std::size_t n = anchors_.size();
    const double s = spec_.input_size;
    const double sx = image_width / s;
    const double sy = image_height / s;

    std::vector<Detection> out;
    for (int c = 1; c < k; ++c) {
        std::vector<std::pair<double, std::size_t>> candidates;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::exp(head.logits[i * k + c] - log_sum_exp(head.logits.data() + i * k, k));
            if (p >= score_threshold) candidates.emplace_back(p, i);
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        if (candidates.size() > static_cast<std::size_t>(kMaxCandidatesPerClass)) {
            candidates.resize(kMaxCandidatesPerClass);
        }
        std::vector<BoundingBox> boxes;
        std::vector<double> scores;
        for (const auto& [p, i] : candidates) {
            const BoxOffsets o{head.offsets[i * 4], head.offsets[i * 4 + 1], head.offsets[i * 4 + 2],
                               head.offsets[i * 4 + 3]};
            BoundingBox b = decode_box(o, anchors_[i]);
            b = {std::clamp(b.x_min * sx, 0.0, static_cast<double>(image_width)),
                 std::clamp(b.y_min * sy, 0.0, static_cast<double>(image_height)),
                 std::clamp(b.x_max * sx, 0.0, static_cast<double>(image_width)),
                 std::clamp(b.y_max * sy, 0.0, static_cast<double>(image_height))};
            if (!b.valid()) continue;
            boxes.push_back(b);
            scores.push_back(p);
        }
        for (std::size_t kept : nms(boxes, scores, kNmsIou)) {
            out.push_back({image_id, boxes[kept], spec_.class_set[static_cast<std::size_t>(c - 1)],
                           std::clamp(scores[kept], 0.0, 1.0)});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& x, const Detection& y) { return x.confidence > y.confidence; });
    if (out.size() > static_cast<std::size_t>(kMaxDetectionsPerImage)) out.resize(kMaxDetectionsPerImage);
    return out;
}

std::vector<Detection> ReferenceMiniHandle::infer(const std::vector<data::LabeledImage>& images,
                                                  double score_threshold, InferStats* stats) const {
    std::vector<Detection> out;
    for (const auto& record : images) {
        Image img;
        try {
            img = load_image(record.path);
        } catch (const Error& e) {
            if (stats) {
                ++stats->skipped_images;
                stats->warnings.push_back("skipped unreadable image " + record.path + ": " + e.what());
            }
            continue;
        }
        auto dets = model_.detect(model_.preprocess(img), record.image_id, img.width(), img.height(), score_threshold);
        out.insert(out.end(), std::make_move_iterator(dets.begin()), std::make_move_iterator(dets.end()));
    }
    return out;
}

void ReferenceMiniHandle::save(const std::filesystem::path& path) const {
    Container c;
    c.metadata = {{"kind", "detector"},
                  {"architecture", to_string(model_.spec().architecture)},
                  {"backbone", to_string(model_.spec().backbone)},
                  {"spec", model_.spec().to_json()}};
    for (const auto& p : model_.parameters()) c.tensors.emplace_back(p.name, p.value);
    write_container(path, c);
}

std::shared_ptr<ReferenceMiniHandle> ReferenceMiniHandle::load(const std::filesystem::path& path) {
    Container c = read_container(path);
    try {
        if (c.metadata.at("kind").get<std::string>() != "detector") {
            throw IoError(path.string() + " is not a detector handle");
        }
        const DetectorSpec spec = DetectorSpec::from_json(c.metadata.at("spec"));
        nn::ParameterList params;
        for (auto& [name, t] : c.tensors) params.emplace_back(name, std::move(t));
        return std::make_shared<ReferenceMiniHandle>(ReferenceMini::from_parameters(spec, std::move(params)));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt detector handle " + path.string() + ": " + e.what());
    }
}

ReferenceMiniAdapter::ReferenceMiniAdapter(DetectorSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.architecture != Architecture::reference_mini) {
        throw ConfigError("ReferenceMiniAdapter cannot host " + to_string(spec_.architecture));
    }
}

namespace {

constexpr std::size_t kImageCacheBudget = std::size_t{1} << 29;  // bytes

struct Sample {
    const data::LabeledImage* record = nullptr;
    Image input;  // empty when not cached
    std::vector<BoundingBox> boxes;
    std::vector<int> labels;
};

}  // namespace

DetectorHandle ReferenceMiniAdapter::train(const data::DatasetManifest& train_set, DetectorTrainLog* log) const {
    if (train_set.records.empty()) throw ValidationError("detector training: empty train split");
    ReferenceMini model = ReferenceMini::create(spec_);
    DetectorTrainLog local;
    DetectorTrainLog& out_log = log ? *log : local;

    const double s = spec_.input_size;
    const bool cache =
        train_set.records.size() * 3 * static_cast<std::size_t>(s * s) * sizeof(double) <= kImageCacheBudget;
    std::vector<Sample> samples;
    for (const auto& r : train_set.records) {
        Sample smp;
        smp.record = &r;
        try {
            if (cache) {
                smp.input = model.preprocess(load_image(r.path));
            } else {
                probe_image_size(r.path);
            }
        } catch (const Error& e) {
            ++out_log.skipped_images;
            out_log.warnings.push_back("skipped unreadable image " + r.path + ": " + e.what());
            continue;
        }
        const double sx = s / r.width;
        const double sy = s / r.height;
        for (const auto& a : r.annotations) {
            const auto it = std::find(spec_.class_set.begin(), spec_.class_set.end(), a.label);
            if (it == spec_.class_set.end()) continue;
            smp.boxes.push_back({a.box.x_min * sx, a.box.y_min * sy, a.box.x_max * sx, a.box.y_max * sy});
            smp.labels.push_back(static_cast<int>(it - spec_.class_set.begin()) + 1);
        }
        samples.push_back(std::move(smp));
    }
    if (samples.empty()) throw ValidationError("detector training: no readable training images");

    nn::Adam adam({spec_.learning_rate, 0.9, 0.999, 1e-8});
    Rng order_rng = SeedStreams(spec_.seed).stream("detector-order");
    const std::size_t n = samples.size();
    const auto batch = static_cast<std::size_t>(spec_.batch_size);
    std::vector<std::size_t> order(n);
    long iteration = 0;
    for (int epoch = 1; epoch <= spec_.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, order_rng);
        for (std::size_t first = 0; first < n; first += batch) {
            ++iteration;
            const std::size_t last = std::min(n, first + batch);
            const double scale = 1.0 / static_cast<double>(last - first);
            nn::zero_grads(model.parameters());
            double loss = 0.0;
            for (std::size_t j = first; j < last; ++j) {
                const Sample& smp = samples[order[j]];
                const Image input = cache ? smp.input : model.preprocess(load_image(smp.record->path));
                loss += scale * model.accumulate_gradient(input, smp.boxes, smp.labels, scale).value;
            }
            if (!std::isfinite(loss)) {
                throw NumericError("detector training: non-finite loss at iteration " + std::to_string(iteration) +
                                   " (epoch " + std::to_string(epoch) + ")");
            }
            adam.step(model.parameters());
            out_log.entries.push_back({epoch, iteration, loss});
        }
    }
    return std::make_shared<ReferenceMiniHandle>(std::move(model));
}

DetectorHandle ReferenceMiniAdapter::load(const std::filesystem::path& path) const {
    auto handle = ReferenceMiniHandle::load(path);
    if (handle->spec().class_set != spec_.class_set) {
        throw ConfigError("detector handle " + path.string() + " was trained for a different class set");
    }
    return handle;
}

}  // namespace thermoscope::detection
