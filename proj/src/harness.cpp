#include "mammoeval/harness.hpp"

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"
#include "mammoeval/version.hpp"

namespace mammoeval {

std::vector<MetricResult> evaluate_prediction_set(const PredictionSet& predictions,
                                                  const EvaluationConfig& config) {
    std::vector<MetricResult> results;
    const auto breast = breast_samples(predictions.breast_predictions);
    results.push_back(bootstrap_ci(breast, MetricKind::auc_roc, MetricLevel::breast, config));
    results.push_back(bootstrap_ci(breast, MetricKind::auc_pr, MetricLevel::breast, config));
    if (predictions.granularity == Granularity::image_level) {
        const auto image = image_samples(predictions.image_predictions);
        results.push_back(bootstrap_ci(image, MetricKind::auc_roc, MetricLevel::image, config));
        results.push_back(bootstrap_ci(image, MetricKind::auc_pr, MetricLevel::image, config));
    }
    return results;
}

PipelineResult run_pipeline(const RunRequest& request) {
    const auto registry = load_registry(request.registry_dir);
    const ModelDescriptor* descriptor = find_model(registry, request.model);
    if (!descriptor) {
        throw DescriptorError("unknown model '" + request.model + "' (registry: " +
                              request.registry_dir.string() + ")");
    }

    Dataset dataset = parse_metadata(request.metadata_path, request.image_dir,
                                     request.dataset_name.value_or(std::string{}));
    const ValidationReport report = validate_dataset(dataset);
    std::vector<std::string> warnings;
    for (const ValidationIssue& issue : report.issues) {
        if (!issue.fatal) {
            warnings.push_back(issue.message);
        }
    }
    if (!report.ok()) {
        std::string first;
        for (const ValidationIssue& issue : report.issues) {
            if (issue.fatal) {
                first = issue.message;
                break;
            }
        }
        throw ValidationError("dataset failed validation with " +
                              std::to_string(report.error_count()) + " error(s); first: " + first);
    }
    if (descriptor->requires_all_four_views) {
        for (const Exam& exam : dataset.exams) {
            for (ViewKey key : kAllViews) {
                if (exam.view(key).empty()) {
                    warnings.push_back("model declares it requires all four views; exam " +
                                       std::to_string(exam.exam_id) + " has no " +
                                       std::string(to_string(key)) + " image");
                }
            }
        }
    }

    InvocationPaths paths;
    if (request.backend == Backend::container) {
        paths.image_dir = kContainerImageDir;
        paths.metadata = kContainerMetadataPath;
        paths.output = std::filesystem::path(kContainerOutputDir) / kOutputCsvName;
    } else {
        paths.image_dir = request.image_dir;
        paths.metadata = request.metadata_path;
        paths.output = request.output_dir / kOutputCsvName;
    }
    const ResolvedInvocation invocation =
        resolve_invocation(*descriptor, request.variant, request.overrides, paths, request.device);

    RunnerOptions options;
    options.backend = request.backend;
    options.timeout = request.timeout;
    options.runtime_binary = request.runtime_binary;
    options.image_dir = request.image_dir;
    options.metadata_path = request.metadata_path;
    options.output_dir = request.output_dir;
    options.dataset_name = dataset.name;
    options.master_seed = request.eval.master_seed;
    options.gpu_probe = request.gpu_probe;

    const RunOutcome outcome = run_model(invocation, options);

    PredictionSet predictions =
        load_prediction_set(outcome.output_csv, dataset, descriptor->granularity);

    ResultsDocument doc;
    doc.harness_version = kVersion;
    doc.model = descriptor->name;
    doc.variant = invocation.variant;
    doc.dataset = dataset.name;
    doc.granularity = descriptor->granularity;
    doc.seed = request.eval.master_seed;
    doc.manifest = outcome.manifest;
    doc.metrics = evaluate_prediction_set(predictions, request.eval);
    doc.exclusions = std::move(predictions.exclusions);
    doc.warnings = std::move(warnings);
    doc.warnings.insert(doc.warnings.end(), predictions.warnings.begin(),
                        predictions.warnings.end());

    write_curves(doc, request.output_dir);
    const auto path = write_results_document(doc, request.output_dir);
    return {std::move(doc), path};
}

PipelineResult score_pipeline(const ScoreRequest& request) {
    Dataset dataset = parse_metadata(request.metadata_path, {},
                                     request.dataset_name.value_or(std::string{}));

    RunManifest manifest;
    manifest.model = request.model_tag;
    manifest.dataset = dataset.name;
    manifest.device = "none";
    manifest.backend = "score-only";
    manifest.started_at = utc_timestamp_now();
    manifest.master_seed = request.eval.master_seed;
    manifest.harness_version = kVersion;
    manifest.metadata_sha256 = sha256_file_hex(request.metadata_path);

    PredictionSet predictions =
        load_prediction_set(request.predictions_csv, dataset, request.granularity);
    manifest.output_sha256 = sha256_file_hex(request.predictions_csv);

    ResultsDocument doc;
    doc.harness_version = kVersion;
    doc.model = request.model_tag;
    doc.dataset = dataset.name;
    doc.granularity = request.granularity;
    doc.seed = request.eval.master_seed;
    doc.metrics = evaluate_prediction_set(predictions, request.eval);
    doc.exclusions = std::move(predictions.exclusions);
    doc.warnings = std::move(predictions.warnings);

    manifest.finished_at = utc_timestamp_now();
    manifest.exit_status = 0;
    doc.manifest = manifest;

    write_curves(doc, request.output_dir);
    const auto path = write_results_document(doc, request.output_dir);
    return {std::move(doc), path};
}

} // namespace mammoeval
