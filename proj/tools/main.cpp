#include <CLI11.hpp>

#include <iostream>

#include "mammoeval/errors.hpp"
#include "mammoeval/harness.hpp"
#include "mammoeval/image.hpp"
#include "mammoeval/util.hpp"
#include "mammoeval/version.hpp"

namespace {

using namespace mammoeval;

ParamBundle parse_param_flags(const std::vector<std::string>& raw) {
    ParamBundle bundle;
    for (const std::string& entry : raw) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw CLI::ValidationError("--param", "expected key=value, got '" + entry + "'");
        }
        bundle[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return bundle;
}

void print_metrics(const ResultsDocument& doc) {
    for (const MetricResult& r : doc.metrics) {
        std::cout << "  " << to_string(r.metric) << " [" << to_string(r.level)
                  << "]: " << format_point_ci(r.point, r.ci_low, r.ci_high) << "  (n="
                  << r.n_samples << ", positives=" << r.n_positives << ")\n";
    }
    if (!doc.exclusions.empty()) {
        std::cout << "  excluded breasts: " << doc.exclusions.size() << "\n";
    }
}

struct CommonEvalFlags {
    std::uint64_t seed = 0;
    std::size_t replicates = 2000;
    double confidence = 0.95;
    unsigned threads = 0;

    EvaluationConfig config() const {
        EvaluationConfig cfg;
        cfg.master_seed = seed;
        cfg.n_replicates = replicates;
        cfg.confidence = confidence;
        cfg.threads = threads;
        return cfg;
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Master seed for the bootstrap");
        cmd->add_option("--replicates", replicates, "Bootstrap replicates")
            ->default_val(2000);
        cmd->add_option("--confidence", confidence, "Confidence level")->default_val(0.95);
        cmd->add_option("--threads", threads, "Bootstrap worker threads (0 = auto)");
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluation harness for breast-cancer screening classifiers"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Check a metadata file and its images");
    std::string v_metadata, v_image_dir;
    validate_cmd->add_option("--metadata", v_metadata, "Metadata JSON file")->required();
    validate_cmd->add_option("--image-dir", v_image_dir, "Image directory");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a registered model and score its output");
    std::string r_model, r_variant, r_image_dir, r_metadata, r_output_dir, r_dataset_name;
    std::string r_device = "cpu", r_backend = "container", r_registry = "registry";
    std::string r_runtime = "docker";
    long long r_timeout = 3600;
    std::vector<std::string> r_params;
    CommonEvalFlags r_eval;
    run_cmd->add_option("--model", r_model, "Model name from the registry")->required();
    run_cmd->add_option("--variant", r_variant, "Model variant");
    run_cmd->add_option("--image-dir", r_image_dir, "Image directory")->required();
    run_cmd->add_option("--metadata", r_metadata, "Metadata JSON file")->required();
    run_cmd->add_option("--output-dir", r_output_dir, "Output directory")->required();
    run_cmd->add_option("--device", r_device, "cpu or gpu")
        ->check(CLI::IsMember({"cpu", "gpu"}));
    run_cmd->add_option("--backend", r_backend, "container or local")
        ->check(CLI::IsMember({"container", "local"}));
    run_cmd->add_option("--registry", r_registry, "Model registry directory")
        ->default_val("registry");
    run_cmd->add_option("--runtime", r_runtime, "Container runtime binary")
        ->default_val("docker");
    run_cmd->add_option("--timeout", r_timeout, "Model timeout in seconds")->default_val(3600);
    run_cmd->add_option("--dataset-name", r_dataset_name, "Dataset label for reports");
    run_cmd->add_option("--param", r_params, "Parameter override key=value (repeatable)");
    r_eval.attach(run_cmd);

    // score
    auto* score_cmd = app.add_subcommand("score", "Score an existing predictions CSV");
    std::string s_predictions, s_metadata, s_output_dir, s_granularity, s_dataset_name;
    std::string s_model_tag = "external";
    CommonEvalFlags s_eval;
    score_cmd->add_option("--predictions", s_predictions, "Predictions CSV")->required();
    score_cmd->add_option("--metadata", s_metadata, "Metadata JSON file")->required();
    score_cmd->add_option("--granularity", s_granularity, "image or breast")
        ->required()
        ->check(CLI::IsMember({"image", "breast", "image-level", "breast-level"}));
    score_cmd->add_option("--output-dir", s_output_dir, "Output directory")->required();
    score_cmd->add_option("--dataset-name", s_dataset_name, "Dataset label for reports");
    score_cmd->add_option("--model-name", s_model_tag, "Model label for reports");
    s_eval.attach(score_cmd);

    // scoreboard
    auto* board_cmd = app.add_subcommand("scoreboard", "Render the results scoreboard");
    std::string b_results_dir, b_registry = "registry", b_output;
    board_cmd->add_option("--results-dir", b_results_dir, "Directory of results documents")
        ->required();
    board_cmd->add_option("--registry", b_registry, "Model registry directory")
        ->default_val("registry");
    board_cmd->add_option("--output", b_output, "Write the markdown here instead of stdout");

    // registry-list
    auto* list_cmd = app.add_subcommand("registry-list", "List registered models");
    std::string l_registry = "registry";
    list_cmd->add_option("--registry", l_registry, "Model registry directory")
        ->default_val("registry");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate_cmd->parsed()) {
            const Dataset dataset = parse_metadata(v_metadata, v_image_dir);
            const ValidationReport report = validate_dataset(dataset);
            std::cout << "dataset '" << dataset.name << "': " << report.exams_total << " exams, "
                      << report.images_total << " images, " << report.images_resolved
                      << " resolved\n";
            for (const ValidationIssue& issue : report.issues) {
                std::cout << (issue.fatal ? "error: " : "warning: ") << issue.message << "\n";
            }
            if (!report.ok()) {
                std::cerr << "validation failed: " << report.error_count() << " error(s)\n";
                return static_cast<int>(ErrorFamily::validation);
            }
            std::cout << "ok: " << report.error_count() << " errors, " << report.warning_count()
                      << " warnings\n";
            return 0;
        }

        if (run_cmd->parsed()) {
            RunRequest request;
            request.model = r_model;
            if (!r_variant.empty()) {
                request.variant = r_variant;
            }
            request.registry_dir = r_registry;
            request.image_dir = r_image_dir;
            request.metadata_path = r_metadata;
            request.output_dir = r_output_dir;
            if (!r_dataset_name.empty()) {
                request.dataset_name = r_dataset_name;
            }
            request.device = *device_from_string(r_device);
            request.backend = *backend_from_string(r_backend);
            request.overrides = parse_param_flags(r_params);
            request.eval = r_eval.config();
            request.timeout = std::chrono::seconds(r_timeout);
            request.runtime_binary = r_runtime;

            const PipelineResult result = run_pipeline(request);
            std::cout << "results: " << result.document_path.string() << "\n";
            print_metrics(result.document);
            return 0;
        }

        if (score_cmd->parsed()) {
            ScoreRequest request;
            request.predictions_csv = s_predictions;
            request.metadata_path = s_metadata;
            request.output_dir = s_output_dir;
            request.granularity = *granularity_from_string(s_granularity);
            if (!s_dataset_name.empty()) {
                request.dataset_name = s_dataset_name;
            }
            request.model_tag = s_model_tag;
            request.eval = s_eval.config();

            const PipelineResult result = score_pipeline(request);
            std::cout << "results: " << result.document_path.string() << "\n";
            print_metrics(result.document);
            return 0;
        }

        if (board_cmd->parsed()) {
            const std::string markdown = render_scoreboard_dir(b_results_dir, b_registry);
            if (b_output.empty()) {
                std::cout << markdown;
            } else {
                write_file_atomic(b_output, markdown);
                std::cout << "scoreboard: " << b_output << "\n";
            }
            return 0;
        }

        if (list_cmd->parsed()) {
            const auto registry = load_registry(l_registry);
            for (const ModelDescriptor& desc : registry) {
                std::cout << desc.name << "  [" << to_string(desc.granularity) << "]  image="
                          << (desc.container_image.empty() ? "(none)" : desc.container_image)
                          << "\n";
                for (const auto& [vname, spec] : desc.variants) {
                    std::cout << "    variant " << vname
                              << (vname == desc.default_variant ? " (default)" : "") << ": "
                              << desc.column_label(vname) << "\n";
                }
            }
            return 0;
        }
    } catch (const HarnessError& e) {
        std::cerr << "error [" << family_name(e.family()) << "]: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
