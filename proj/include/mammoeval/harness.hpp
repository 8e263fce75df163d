#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "mammoeval/predictions.hpp"
#include "mammoeval/results.hpp"

namespace mammoeval {

struct RunRequest {
    std::string model;
    std::optional<std::string> variant;
    std::filesystem::path registry_dir;
    std::filesystem::path image_dir;
    std::filesystem::path metadata_path;
    std::filesystem::path output_dir;
    std::optional<std::string> dataset_name; // default: metadata file stem
    Device device = Device::cpu;
    Backend backend = Backend::container;
    ParamBundle overrides;
    EvaluationConfig eval;
    std::chrono::seconds timeout{3600};
    std::string runtime_binary = "docker";
    std::function<bool()> gpu_probe;
};

struct ScoreRequest {
    std::filesystem::path predictions_csv;
    std::filesystem::path metadata_path;
    std::filesystem::path output_dir;
    Granularity granularity = Granularity::breast_level;
    std::optional<std::string> dataset_name;
    std::string model_tag = "external";
    EvaluationConfig eval;
};

struct PipelineResult {
    ResultsDocument document;
    std::filesystem::path document_path;
};

/// validate -> run_model -> parse -> (aggregate) -> metrics -> write
/// document, curves, and manifest.
PipelineResult run_pipeline(const RunRequest& request);

/// The identical metric pipeline minus model execution: scores an
/// existing predictions CSV against a metadata file.
PipelineResult score_pipeline(const ScoreRequest& request);

/// AUC ROC and AUC PR with bootstrap CIs at breast level, plus image
/// level for image-granularity prediction sets.
std::vector<MetricResult> evaluate_prediction_set(const PredictionSet& predictions,
                                                  const EvaluationConfig& config);

} // namespace mammoeval
