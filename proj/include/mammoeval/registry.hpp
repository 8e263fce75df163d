#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mammoeval {

enum class Granularity { image_level, breast_level };

std::string_view to_string(Granularity granularity);
std::optional<Granularity> granularity_from_string(std::string_view name);

enum class Device { cpu, gpu };

std::string_view to_string(Device device);
std::optional<Device> device_from_string(std::string_view name);

using ParamBundle = std::map<std::string, std::string>;

struct VariantSpec {
    std::string label; // scoreboard column label
    ParamBundle params;
};

/// A registered model: container image, entrypoint argument template with
/// {PLACEHOLDER}s, declared parameters with optional defaults, and named
/// variants. Descriptors are data files; the harness never executes
/// contributor code outside the container (or declared local entrypoint).
struct ModelDescriptor {
    std::string name;
    std::string display_name;
    std::string container_image;
    std::vector<std::string> entrypoint_args;
    Granularity granularity = Granularity::image_level;
    bool requires_all_four_views = false;
    std::map<std::string, std::optional<std::string>> parameters;
    std::string default_variant; // empty: none
    std::vector<std::pair<std::string, VariantSpec>> variants; // declared order
    std::optional<std::string> local_entrypoint; // relative to the descriptor file
    std::filesystem::path source_file;

    const VariantSpec* find_variant(std::string_view name) const;
    std::string column_label(std::string_view variant) const;
};

struct InvocationPaths {
    std::filesystem::path image_dir;
    std::filesystem::path metadata;
    std::filesystem::path output;
};

struct ResolvedInvocation {
    std::string model;
    std::string variant;
    std::string container_image;
    std::optional<std::filesystem::path> local_entrypoint; // absolute
    Device device = Device::cpu;
    std::vector<std::string> args; // fully substituted
    ParamBundle params;            // resolved parameter values (provenance)
};

ModelDescriptor parse_descriptor(const std::filesystem::path& file);

/// Loads every *.json descriptor in `dir`. Result is sorted by name and
/// independent of filesystem enumeration order. Duplicate names are a
/// DescriptorError.
std::vector<ModelDescriptor> load_registry(const std::filesystem::path& dir);

const ModelDescriptor* find_model(std::span<const ModelDescriptor> registry,
                                  std::string_view name);

/// Substitutes every placeholder in the entrypoint template. Parameter
/// precedence: overrides > variant bundle > declared defaults. Throws
/// UnknownVariantError / MissingParamError / DescriptorError.
ResolvedInvocation resolve_invocation(const ModelDescriptor& descriptor,
                                      const std::optional<std::string>& variant,
                                      const ParamBundle& overrides,
                                      const InvocationPaths& paths,
                                      Device device);

/// Placeholder names appearing in a template string ({NAME} syntax).
std::vector<std::string> placeholder_names(std::string_view templ);

std::string substitute_placeholders(std::string_view templ,
                                    const std::map<std::string, std::string>& values);

} // namespace mammoeval
