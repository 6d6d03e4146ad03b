#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermoscope::data {

// Corner-form box in continuous pixel coordinates, origin top-left.
struct BoundingBox {
    double x_min = 0;
    double y_min = 0;
    double x_max = 0;
    double y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool valid() const { return x_min < x_max && y_min < y_max; }
    bool within(double image_width, double image_height) const {
        return x_min >= 0 && y_min >= 0 && x_max <= image_width && y_max <= image_height;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ObjectAnnotation {
    BoundingBox box;
    std::string label;
    bool difficult = false;

    friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

enum class Spectrum { thermal, visible };

std::string to_string(Spectrum s);
Spectrum parse_spectrum(const std::string& s);

struct LabeledImage {
    std::string image_id;
    std::string path;
    int width = 0;
    int height = 0;
    Spectrum spectrum = Spectrum::thermal;
    std::vector<ObjectAnnotation> annotations;
    // Shared by the visible and thermal frames of a KAIST-style pair; empty
    // for unpaired records.
    std::string pair_key;

    friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

enum class SplitRole { train, val };

std::string to_string(SplitRole r);
SplitRole parse_split_role(const std::string& s);

struct DatasetManifest {
    std::string name;
    std::vector<std::string> class_set;
    std::vector<LabeledImage> records;
    std::map<std::string, SplitRole> split;

    std::vector<const LabeledImage*> records_in(SplitRole role) const;
    // Copy with only the records of one split role; all of them keep it.
    DatasetManifest subset(SplitRole role) const;
    const LabeledImage* find(const std::string& image_id) const;
    bool has_class(const std::string& label) const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Canonical class sets.
const std::vector<std::string>& flir_classes();   // car, bicycle, person
const std::vector<std::string>& kaist_classes();  // person

// Warnings gathered while ingesting real, noisy annotation files.
struct IngestReport {
    std::size_t dropped_dog = 0;
    std::size_t skipped_unknown_class = 0;
    std::size_t clipped_boxes = 0;
    std::size_t dropped_degenerate_boxes = 0;
    std::vector<std::string> warnings;

    std::size_t warning_count() const {
        return skipped_unknown_class + clipped_boxes + dropped_degenerate_boxes;
    }
};

struct IngestResult {
    DatasetManifest manifest;
    IngestReport report;
};

// Throws ValidationError on the first broken invariant.
void validate(const BoundingBox& box, int width, int height, const std::string& context);
void validate(const LabeledImage& record, const std::vector<std::string>* class_set = nullptr);
void validate(const DatasetManifest& manifest);

}  // namespace thermoscope::data
