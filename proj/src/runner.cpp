#include "mammoeval/runner.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"
#include "mammoeval/version.hpp"

namespace mammoeval {

std::string_view to_string(Backend backend) {
    return backend == Backend::container ? "container" : "local-process";
}

std::optional<Backend> backend_from_string(std::string_view name) {
    if (name == "container") return Backend::container;
    if (name == "local" || name == "local-process") return Backend::local_process;
    return std::nullopt;
}

namespace {

bool default_gpu_probe() {
    std::error_code ec;
    return std::filesystem::exists("/dev/nvidiactl", ec) ||
           std::filesystem::exists("/dev/nvidia0", ec);
}

// One model execution at a time per device token.
std::mutex& device_mutex(const std::string& device) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::mutex> mutexes;
    std::lock_guard<std::mutex> lock(registry_mutex);
    return mutexes[device];
}

std::string stderr_tail(const std::filesystem::path& log, std::size_t max_lines) {
    const auto content = read_file(log);
    if (!content || content->empty()) {
        return "(no stderr captured)";
    }
    std::vector<std::string_view> lines;
    std::string_view text = *content;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    const std::size_t first = lines.size() > max_lines ? lines.size() - max_lines : 0;
    std::string out;
    for (std::size_t i = first; i < lines.size(); ++i) {
        out += std::string(lines[i]);
        out.push_back('\n');
    }
    return out;
}

struct ChildResult {
    int exit_status = -1;
    bool timed_out = false;
};

ChildResult launch_and_wait(const std::vector<std::string>& argv,
                            const std::filesystem::path& log_path,
                            std::chrono::seconds timeout) {
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& arg : argv) {
        cargv.push_back(const_cast<char*>(arg.c_str()));
    }
    cargv.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) {
        throw LaunchError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        setpgid(0, 0); // own process group, so the whole tree can be killed
        const int fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
            close(fd);
        }
        execvp(cargv[0], cargv.data());
        _exit(127);
    }
    setpgid(pid, pid);

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        int status = 0;
        const pid_t reaped = waitpid(pid, &status, WNOHANG);
        if (reaped == pid) {
            if (WIFEXITED(status)) {
                return {WEXITSTATUS(status), false};
            }
            if (WIFSIGNALED(status)) {
                return {128 + WTERMSIG(status), false};
            }
            continue;
        }
        if (reaped < 0) {
            throw LaunchError(std::string("waitpid failed: ") + std::strerror(errno));
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            return {-1, true};
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

} // namespace

std::vector<Device> list_devices(const std::function<bool()>& gpu_probe) {
    std::vector<Device> devices = {Device::cpu};
    const bool gpu = gpu_probe ? gpu_probe() : default_gpu_probe();
    if (gpu) {
        devices.push_back(Device::gpu);
    }
    return devices;
}

std::vector<std::string> build_container_argv(const ResolvedInvocation& invocation,
                                              const RunnerOptions& options) {
    std::vector<std::string> argv = {options.runtime_binary, "run", "--rm"};
    argv.emplace_back("-v");
    argv.push_back(std::filesystem::absolute(options.image_dir).string() + ":" +
                   std::string(kContainerImageDir) + ":ro");
    argv.emplace_back("-v");
    argv.push_back(std::filesystem::absolute(options.metadata_path).string() + ":" +
                   std::string(kContainerMetadataPath) + ":ro");
    argv.emplace_back("-v");
    argv.push_back(std::filesystem::absolute(options.output_dir).string() + ":" +
                   std::string(kContainerOutputDir));
    if (invocation.device == Device::gpu) {
        argv.emplace_back("--gpus");
        argv.emplace_back("all");
    }
    argv.push_back(invocation.container_image);
    argv.insert(argv.end(), invocation.args.begin(), invocation.args.end());
    return argv;
}

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["model"] = m.model;
    j["variant"] = m.variant;
    j["dataset"] = m.dataset;
    j["device"] = m.device;
    j["backend"] = m.backend;
    j["started_at"] = m.started_at;
    j["finished_at"] = m.finished_at;
    j["exit_status"] = m.exit_status;
    j["metadata_sha256"] = m.metadata_sha256;
    j["output_sha256"] = m.output_sha256;
    j["master_seed"] = m.master_seed;
    j["harness_version"] = m.harness_version;
    return j;
}

RunManifest manifest_from_json(const nlohmann::json& doc) {
    RunManifest m;
    m.model = doc.value("model", std::string{});
    m.variant = doc.value("variant", std::string{});
    m.dataset = doc.value("dataset", std::string{});
    m.device = doc.value("device", std::string{});
    m.backend = doc.value("backend", std::string{});
    m.started_at = doc.value("started_at", std::string{});
    m.finished_at = doc.value("finished_at", std::string{});
    m.exit_status = doc.value("exit_status", -1);
    m.metadata_sha256 = doc.value("metadata_sha256", std::string{});
    m.output_sha256 = doc.value("output_sha256", std::string{});
    m.master_seed = doc.value("master_seed", std::uint64_t{0});
    m.harness_version = doc.value("harness_version", std::string{});
    return m;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& output_dir) {
    write_file_atomic(output_dir / kManifestName, manifest_to_json(manifest).dump(2) + "\n");
}

RunOutcome run_model(const ResolvedInvocation& invocation, const RunnerOptions& options) {
    if (invocation.device == Device::gpu) {
        const bool gpu = options.gpu_probe ? options.gpu_probe() : default_gpu_probe();
        if (!gpu) {
            throw LaunchError("gpu requested but no gpu is available");
        }
    }

    std::filesystem::create_directories(options.output_dir);
    const std::filesystem::path output_csv = options.output_dir / kOutputCsvName;
    std::error_code ec;
    std::filesystem::remove(output_csv, ec); // a stale file must not pass as output

    std::vector<std::string> argv;
    if (options.backend == Backend::container) {
        if (invocation.container_image.empty()) {
            throw LaunchError("model '" + invocation.model + "' declares no container image");
        }
        argv = build_container_argv(invocation, options);
    } else {
        if (!invocation.local_entrypoint) {
            throw LaunchError("model '" + invocation.model +
                              "' has no local entrypoint; use the container backend");
        }
        if (!std::filesystem::exists(*invocation.local_entrypoint, ec)) {
            throw LaunchError("local entrypoint not found: " +
                              invocation.local_entrypoint->string());
        }
        argv.push_back(invocation.local_entrypoint->string());
        argv.insert(argv.end(), invocation.args.begin(), invocation.args.end());
    }

    RunManifest manifest;
    manifest.model = invocation.model;
    manifest.variant = invocation.variant;
    manifest.dataset = options.dataset_name;
    manifest.device = std::string(to_string(invocation.device));
    manifest.backend = std::string(to_string(options.backend));
    manifest.master_seed = options.master_seed;
    manifest.harness_version = kVersion;
    if (std::filesystem::exists(options.metadata_path, ec)) {
        manifest.metadata_sha256 = sha256_file_hex(options.metadata_path);
    }

    const std::filesystem::path log_path = options.output_dir / kStderrLogName;

    std::lock_guard<std::mutex> device_lock(device_mutex(manifest.device));
    manifest.started_at = utc_timestamp_now();
    const ChildResult child = launch_and_wait(argv, log_path, options.timeout);
    manifest.finished_at = utc_timestamp_now();
    manifest.exit_status = child.exit_status;

    if (child.timed_out) {
        write_manifest(manifest, options.output_dir);
        throw TimeoutError("model run exceeded " + std::to_string(options.timeout.count()) +
                           "s and was killed");
    }
    if (child.exit_status == 127) {
        write_manifest(manifest, options.output_dir);
        throw LaunchError("failed to execute '" + argv[0] + "' (exit 127)\n" +
                          stderr_tail(log_path, 40));
    }
    if (child.exit_status != 0) {
        write_manifest(manifest, options.output_dir);
        throw ModelError("model exited with status " + std::to_string(child.exit_status) +
                         "\n--- stderr tail ---\n" + stderr_tail(log_path, 40));
    }
    if (!std::filesystem::is_regular_file(output_csv, ec)) {
        write_manifest(manifest, options.output_dir);
        throw OutputMissingError("model exited 0 but wrote no output at " + output_csv.string());
    }
    if (std::filesystem::file_size(output_csv, ec) == 0) {
        write_manifest(manifest, options.output_dir);
        throw OutputMissingError("model output is empty: " + output_csv.string());
    }

    manifest.output_sha256 = sha256_file_hex(output_csv);
    write_manifest(manifest, options.output_dir);
    return {output_csv, manifest};
}

} // namespace mammoeval
