#pragma once

#include <vector>

#include "thermoscope/detection/anchors.hpp"
#include "thermoscope/detection/detector.hpp"
#include "thermoscope/image.hpp"
#include "thermoscope/nn/graph.hpp"

namespace thermoscope::detection {

// Sum of softmax cross-entropy (background plus 3:1 hard negatives) and
// smooth-L1 box regression, divided by the positive count. Gradients are
// with respect to logits (N, C+1) and offsets (N, 4).
struct MultiboxLoss {
    double value = 0;
    double classification = 0;
    double localization = 0;
    int positives = 0;
    Tensor d_logits;
    Tensor d_offsets;
};

inline constexpr int kNegativesPerPositive = 3;

// labels are 1-based class indices parallel to gt_boxes.
MultiboxLoss multibox_loss(const Tensor& logits, const Tensor& offsets, const std::vector<BoundingBox>& anchors,
                           const std::vector<BoundingBox>& gt_boxes, const std::vector<int>& labels);

// Single-scale anchor detector: four stride-2/2/2/1 3x3 convolutions, a
// shared 3x3 head and two 3x3 predictors (class logits, box offsets) on the
// stride-8 map.
class ReferenceMini {
public:
    static const AnchorLayout& anchor_layout();
    static constexpr double kNmsIou = 0.45;
    static constexpr int kMaxDetectionsPerImage = 100;
    static constexpr int kMaxCandidatesPerClass = 200;

    static ReferenceMini create(const DetectorSpec& spec);
    static ReferenceMini from_parameters(const DetectorSpec& spec, nn::ParameterList params);

    const DetectorSpec& spec() const { return spec_; }
    nn::ParameterList& parameters() { return params_; }
    const nn::ParameterList& parameters() const { return params_; }
    int num_classes() const { return static_cast<int>(spec_.class_set.size()); }
    const std::vector<BoundingBox>& anchors() const { return anchors_; }

    // Resized to input_size x input_size.
    Image preprocess(const Image& image) const;

    struct HeadOutput {
        Tensor logits;   // (N, C+1)
        Tensor offsets;  // (N, 4)
    };
    HeadOutput predict(const Image& input) const;

    // Loss on one preprocessed image; adds grad_scale * d(loss)/d(params)
    // into the parameter gradients. Boxes are in input coordinates.
    MultiboxLoss accumulate_gradient(const Image& input, const std::vector<BoundingBox>& gt_boxes,
                                     const std::vector<int>& labels, double grad_scale);

    // Boxes mapped back to an image of the given size and clipped to it.
    std::vector<Detection> detect(const Image& input, const std::string& image_id, int image_width, int image_height,
                                  double score_threshold) const;

private:
    template <class Bind>
    std::pair<nn::Var, nn::Var> build(nn::Graph& g, nn::Var x, Bind&& bind) const;

    DetectorSpec spec_;
    nn::ParameterList params_;
    std::vector<BoundingBox> anchors_;
    int grid_ = 0;
};

class ReferenceMiniHandle final : public TrainedDetector {
public:
    explicit ReferenceMiniHandle(ReferenceMini model) : model_(std::move(model)) {}

    const DetectorSpec& spec() const override { return model_.spec(); }
    std::vector<Detection> infer(const std::vector<data::LabeledImage>& images, double score_threshold,
                                 InferStats* stats = nullptr) const override;
    void save(const std::filesystem::path& path) const override;

    const ReferenceMini& model() const { return model_; }
    static std::shared_ptr<ReferenceMiniHandle> load(const std::filesystem::path& path);

private:
    ReferenceMini model_;
};

class ReferenceMiniAdapter final : public DetectorAdapter {
public:
    explicit ReferenceMiniAdapter(DetectorSpec spec);

    const DetectorSpec& spec() const override { return spec_; }
    DetectorHandle train(const data::DatasetManifest& train_set, DetectorTrainLog* log) const override;
    DetectorHandle load(const std::filesystem::path& path) const override;

private:
    DetectorSpec spec_;
};

}  // namespace thermoscope::detection
