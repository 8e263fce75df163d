#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mammoeval/registry.hpp"

namespace mammoeval {

enum class Backend { container, local_process };

std::string_view to_string(Backend backend);
std::optional<Backend> backend_from_string(std::string_view name); // "container"/"local"

/// Provenance record of one model execution. Written if and only if the
/// run reached process launch; hashes are recomputable from the artifacts.
struct RunManifest {
    std::string model;
    std::string variant;
    std::string dataset;
    std::string device;
    std::string backend;
    std::string started_at;  // ISO-8601 UTC
    std::string finished_at; // ISO-8601 UTC
    int exit_status = -1;
    std::string metadata_sha256;
    std::string output_sha256;
    std::uint64_t master_seed = 0;
    std::string harness_version;

    bool operator==(const RunManifest&) const = default;
};

struct RunnerOptions {
    Backend backend = Backend::local_process;
    std::chrono::seconds timeout{3600};
    std::string runtime_binary = "docker";
    std::filesystem::path image_dir;
    std::filesystem::path metadata_path;
    std::filesystem::path output_dir;
    std::string dataset_name;
    std::uint64_t master_seed = 0;
    std::function<bool()> gpu_probe; // empty: probe /dev/nvidia*
};

struct RunOutcome {
    std::filesystem::path output_csv;
    RunManifest manifest;
};

// Fixed in-container mount points. Contributor templates should use the
// {IMAGE_DIR}/{METADATA_PATH}/{OUTPUT_PATH} placeholders rather than
// hard-coding these.
inline constexpr std::string_view kContainerImageDir = "/data/images";
inline constexpr std::string_view kContainerMetadataPath = "/data/metadata.json";
inline constexpr std::string_view kContainerOutputDir = "/data/output";
inline constexpr std::string_view kOutputCsvName = "predictions.csv";
inline constexpr std::string_view kManifestName = "run_manifest.json";
inline constexpr std::string_view kStderrLogName = "model_stderr.log";

/// cpu is always present; gpu when the probe reports an accelerator.
std::vector<Device> list_devices(const std::function<bool()>& gpu_probe = {});

/// OCI-style command line: run --rm with the image directory and metadata
/// bound read-only, the output directory writable, and the resolved
/// entrypoint arguments appended after the image reference.
std::vector<std::string> build_container_argv(const ResolvedInvocation& invocation,
                                              const RunnerOptions& options);

/// Executes one model run. stderr/stdout are captured to a per-run log;
/// on failure the last 40 lines are embedded in the error. The child runs
/// in its own process group and the whole tree is killed on timeout.
/// Throws LaunchError / ModelError / OutputMissingError / TimeoutError.
RunOutcome run_model(const ResolvedInvocation& invocation, const RunnerOptions& options);

nlohmann::ordered_json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& doc);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& output_dir);

} // namespace mammoeval
