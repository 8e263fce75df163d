#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mammoeval/dataset.hpp"
#include "mammoeval/metrics.hpp"
#include "mammoeval/registry.hpp"

namespace mammoeval {

// Both CSV contracts are byte-exact: these literal headers, comma
// separators, no quoting, newline-terminated rows.
inline constexpr std::string_view kImageCsvHeader =
    "image_index,malignant_pred,malignant_label";
inline constexpr std::string_view kBreastCsvHeader =
    "index,left_malignant,right_malignant";

struct ImagePrediction {
    std::string image_index; // shortened path
    double malignant_pred = 0.0;
    int malignant_label = 0; // always the dataset's label, never the model's
    int exam_id = -1;
    ViewKey view = ViewKey::l_cc;
    BreastSide side = BreastSide::left;
};

struct BreastPrediction {
    int exam_id = -1;
    BreastSide side = BreastSide::left;
    double score = 0.0;
    int label = 0;
    std::size_t n_images = 0;
};

struct ImageCsv {
    std::vector<ImagePrediction> rows;
    std::vector<std::string> warnings;
};

struct BreastCsv {
    std::vector<BreastPrediction> rows;
    std::vector<std::string> warnings;
};

struct Aggregation {
    std::vector<BreastPrediction> breasts;
    std::vector<std::string> exclusions;
    std::vector<std::string> warnings;
};

struct PredictionSet {
    Granularity granularity = Granularity::breast_level;
    std::vector<ImagePrediction> image_predictions; // empty for breast-level models
    std::vector<BreastPrediction> breast_predictions;
    std::vector<std::string> exclusions;
    std::vector<std::string> warnings;
};

/// Parses the image-level contract. Every image_index must resolve to
/// exactly one (exam, view, position) in the dataset; the label column is
/// cross-checked against the dataset and the dataset wins (mismatches are
/// warnings). Throws HeaderError / UnknownImageError / BadValueError.
ImageCsv parse_image_csv(std::string_view text, const Dataset& dataset);

/// Parses the breast-level contract. Row k joins to exam k by position;
/// the index column is ignored. Row count must equal the exam count.
BreastCsv parse_breast_csv(std::string_view text, const Dataset& dataset);

/// Per (exam, side): score = arithmetic mean over all scored images of
/// that breast, across both views and any repeats. Breasts with nothing to
/// score are excluded and logged. Output is in exam order, left before
/// right.
Aggregation aggregate_to_breast(std::span<const ImagePrediction> predictions,
                                const Dataset& dataset);

/// Full join for one model output file: parse under the declared
/// granularity, aggregate if image-level, drop breasts without images.
PredictionSet load_prediction_set(const std::filesystem::path& csv,
                                  const Dataset& dataset, Granularity granularity);

// Canonical writers (4 decimal places), used for fixtures; parse -> write
// -> parse round-trips byte-identically on canonical input.
std::string write_image_csv(std::span<const ImagePrediction> rows);
std::string write_breast_csv(std::span<const BreastPrediction> rows);

std::vector<ScoredSample> breast_samples(std::span<const BreastPrediction> preds);
std::vector<ScoredSample> image_samples(std::span<const ImagePrediction> preds);

} // namespace mammoeval
