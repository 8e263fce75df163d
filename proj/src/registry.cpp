#include "mammoeval/registry.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <set>

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"

namespace mammoeval {

using nlohmann::ordered_json;

std::string_view to_string(Granularity granularity) {
    return granularity == Granularity::image_level ? "image-level" : "breast-level";
}

std::optional<Granularity> granularity_from_string(std::string_view name) {
    if (name == "image-level" || name == "image") return Granularity::image_level;
    if (name == "breast-level" || name == "breast") return Granularity::breast_level;
    return std::nullopt;
}

std::string_view to_string(Device device) {
    return device == Device::cpu ? "cpu" : "gpu";
}

std::optional<Device> device_from_string(std::string_view name) {
    if (name == "cpu") return Device::cpu;
    if (name == "gpu") return Device::gpu;
    return std::nullopt;
}

const VariantSpec* ModelDescriptor::find_variant(std::string_view name) const {
    for (const auto& [vname, spec] : variants) {
        if (vname == name) {
            return &spec;
        }
    }
    return nullptr;
}

std::string ModelDescriptor::column_label(std::string_view variant) const {
    if (variant.empty()) {
        return display_name;
    }
    if (const VariantSpec* spec = find_variant(variant); spec && !spec->label.empty()) {
        return spec->label;
    }
    return display_name + " (" + std::string(variant) + ")";
}

namespace {

constexpr std::string_view kBuiltinPlaceholders[] = {"IMAGE_DIR", "METADATA_PATH",
                                                     "OUTPUT_PATH", "DEVICE"};

bool is_builtin_placeholder(std::string_view name) {
    return std::find(std::begin(kBuiltinPlaceholders), std::end(kBuiltinPlaceholders), name) !=
           std::end(kBuiltinPlaceholders);
}

[[noreturn]] void descriptor_fail(const std::filesystem::path& file, const std::string& detail) {
    throw DescriptorError(file.string() + ": " + detail);
}

void check_mean_pixel_intensity(const std::filesystem::path& file, const std::string& value) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || v < 0.0 || v > 255.0) {
        descriptor_fail(file, "mean_pixel_intensity must be a real in [0, 255], got '" + value +
                                  "'");
    }
}

void check_param_value(const std::filesystem::path& file, const std::string& key,
                       const std::string& value) {
    if (value.find('{') != std::string::npos || value.find('}') != std::string::npos) {
        descriptor_fail(file, "parameter '" + key + "' value may not contain braces");
    }
    if (key == "mean_pixel_intensity") {
        check_mean_pixel_intensity(file, value);
    }
}

} // namespace

std::vector<std::string> placeholder_names(std::string_view templ) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos < templ.size()) {
        const std::size_t open = templ.find('{', pos);
        if (open == std::string_view::npos) {
            break;
        }
        const std::size_t close = templ.find('}', open + 1);
        if (close == std::string_view::npos) {
            throw DescriptorError("unterminated placeholder in template '" + std::string(templ) +
                                  "'");
        }
        names.emplace_back(templ.substr(open + 1, close - open - 1));
        pos = close + 1;
    }
    return names;
}

std::string substitute_placeholders(std::string_view templ,
                                    const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(templ.size());
    std::size_t pos = 0;
    while (pos < templ.size()) {
        const std::size_t open = templ.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(templ.substr(pos));
            break;
        }
        out.append(templ.substr(pos, open - pos));
        const std::size_t close = templ.find('}', open + 1);
        if (close == std::string_view::npos) {
            throw DescriptorError("unterminated placeholder in template '" + std::string(templ) +
                                  "'");
        }
        const std::string name(templ.substr(open + 1, close - open - 1));
        const auto it = values.find(name);
        if (it == values.end()) {
            throw MissingParamError("no value for placeholder '{" + name + "}'");
        }
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

ModelDescriptor parse_descriptor(const std::filesystem::path& file) {
    const auto text = read_file(file);
    if (!text) {
        descriptor_fail(file, "cannot read descriptor");
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(*text);
    } catch (const nlohmann::json::parse_error& e) {
        descriptor_fail(file, std::string("malformed descriptor: ") + e.what());
    }
    if (!doc.is_object()) {
        descriptor_fail(file, "descriptor must be an object");
    }

    static constexpr std::string_view known_keys[] = {
        "name",          "display_name", "container_image", "granularity",
        "requires_all_four_views",       "entrypoint_args", "parameters",
        "default_variant",               "variants",        "local_entrypoint"};
    for (const auto& item : doc.items()) {
        if (std::find(std::begin(known_keys), std::end(known_keys), item.key()) ==
            std::end(known_keys)) {
            descriptor_fail(file, "unknown key '" + item.key() + "'");
        }
    }

    ModelDescriptor desc;
    desc.source_file = file;

    if (!doc.contains("name") || !doc["name"].is_string()) {
        descriptor_fail(file, "missing string 'name'");
    }
    desc.name = doc["name"].get<std::string>();
    if (desc.name.empty() || desc.name != sanitize_token(desc.name)) {
        descriptor_fail(file, "name must be non-empty and use [A-Za-z0-9._-] only");
    }
    desc.display_name = doc.value("display_name", desc.name);
    desc.container_image = doc.value("container_image", std::string{});

    if (!doc.contains("granularity") || !doc["granularity"].is_string()) {
        descriptor_fail(file, "missing string 'granularity'");
    }
    const auto granularity = granularity_from_string(doc["granularity"].get<std::string>());
    if (!granularity) {
        descriptor_fail(file, "granularity must be image-level or breast-level");
    }
    desc.granularity = *granularity;
    desc.requires_all_four_views = doc.value("requires_all_four_views", false);

    if (!doc.contains("entrypoint_args") || !doc["entrypoint_args"].is_array()) {
        descriptor_fail(file, "missing array 'entrypoint_args'");
    }
    for (const auto& arg : doc["entrypoint_args"]) {
        if (!arg.is_string()) {
            descriptor_fail(file, "entrypoint_args entries must be strings");
        }
        desc.entrypoint_args.push_back(arg.get<std::string>());
    }

    if (doc.contains("parameters")) {
        if (!doc["parameters"].is_object()) {
            descriptor_fail(file, "'parameters' must be an object");
        }
        for (const auto& item : doc["parameters"].items()) {
            if (item.value().is_null()) {
                desc.parameters[item.key()] = std::nullopt;
            } else if (item.value().is_string()) {
                check_param_value(file, item.key(), item.value().get<std::string>());
                desc.parameters[item.key()] = item.value().get<std::string>();
            } else {
                descriptor_fail(file, "parameter '" + item.key() + "' must be a string or null");
            }
        }
    }

    if (doc.contains("variants")) {
        if (!doc["variants"].is_object()) {
            descriptor_fail(file, "'variants' must be an object");
        }
        std::set<std::string> seen;
        for (const auto& item : doc["variants"].items()) {
            if (!seen.insert(item.key()).second) {
                descriptor_fail(file, "duplicate variant '" + item.key() + "'");
            }
            if (!item.value().is_object()) {
                descriptor_fail(file, "variant '" + item.key() + "' must be an object");
            }
            VariantSpec spec;
            spec.label = item.value().value("label", std::string{});
            if (item.value().contains("params")) {
                if (!item.value()["params"].is_object()) {
                    descriptor_fail(file, "variant '" + item.key() + "' params must be an object");
                }
                for (const auto& p : item.value()["params"].items()) {
                    if (!p.value().is_string()) {
                        descriptor_fail(file, "variant parameter '" + p.key() +
                                                  "' must be a string");
                    }
                    if (!desc.parameters.count(p.key())) {
                        descriptor_fail(file, "variant '" + item.key() +
                                                  "' sets undeclared parameter '" + p.key() + "'");
                    }
                    check_param_value(file, p.key(), p.value().get<std::string>());
                    spec.params[p.key()] = p.value().get<std::string>();
                }
            }
            for (const auto& v : item.value().items()) {
                if (v.key() != "label" && v.key() != "params") {
                    descriptor_fail(file, "variant '" + item.key() + "' has unknown key '" +
                                              v.key() + "'");
                }
            }
            desc.variants.emplace_back(item.key(), std::move(spec));
        }
    }

    desc.default_variant = doc.value("default_variant", std::string{});
    if (!desc.default_variant.empty() && !desc.find_variant(desc.default_variant)) {
        descriptor_fail(file, "default_variant '" + desc.default_variant + "' is not a variant");
    }

    if (doc.contains("local_entrypoint") && !doc["local_entrypoint"].is_null()) {
        if (!doc["local_entrypoint"].is_string()) {
            descriptor_fail(file, "'local_entrypoint' must be a string");
        }
        desc.local_entrypoint = doc["local_entrypoint"].get<std::string>();
    }

    // Placeholder whitelist: the four builtins plus declared parameters.
    for (const std::string& arg : desc.entrypoint_args) {
        std::vector<std::string> names;
        try {
            names = placeholder_names(arg);
        } catch (const DescriptorError& e) {
            descriptor_fail(file, e.what());
        }
        for (const std::string& name : names) {
            if (!is_builtin_placeholder(name) && !desc.parameters.count(name)) {
                descriptor_fail(file, "undeclared placeholder '{" + name + "}' in entrypoint_args");
            }
        }
    }
    return desc;
}

std::vector<ModelDescriptor> load_registry(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw DescriptorError("registry directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<ModelDescriptor> registry;
    registry.reserve(files.size());
    std::set<std::string> names;
    for (const auto& file : files) {
        ModelDescriptor desc = parse_descriptor(file);
        if (!names.insert(desc.name).second) {
            throw DescriptorError("duplicate model name '" + desc.name + "' in " + dir.string());
        }
        registry.push_back(std::move(desc));
    }
    std::sort(registry.begin(), registry.end(),
              [](const ModelDescriptor& a, const ModelDescriptor& b) { return a.name < b.name; });
    return registry;
}

const ModelDescriptor* find_model(std::span<const ModelDescriptor> registry,
                                  std::string_view name) {
    for (const ModelDescriptor& desc : registry) {
        if (desc.name == name) {
            return &desc;
        }
    }
    return nullptr;
}

ResolvedInvocation resolve_invocation(const ModelDescriptor& descriptor,
                                      const std::optional<std::string>& variant,
                                      const ParamBundle& overrides,
                                      const InvocationPaths& paths, Device device) {
    const std::string chosen = variant.value_or(descriptor.default_variant);
    const VariantSpec* spec = nullptr;
    if (!chosen.empty()) {
        spec = descriptor.find_variant(chosen);
        if (!spec) {
            throw UnknownVariantError("model '" + descriptor.name + "' has no variant '" + chosen +
                                      "'");
        }
    }

    for (const auto& [key, value] : overrides) {
        if (!descriptor.parameters.count(key)) {
            throw DescriptorError("override for undeclared parameter '" + key + "' of model '" +
                                  descriptor.name + "'");
        }
        check_param_value(descriptor.source_file, key, value);
    }

    // precedence: overrides > variant bundle > declared defaults
    std::map<std::string, std::string> values;
    for (const auto& [key, default_value] : descriptor.parameters) {
        if (default_value) {
            values[key] = *default_value;
        }
    }
    if (spec) {
        for (const auto& [key, value] : spec->params) {
            values[key] = value;
        }
    }
    for (const auto& [key, value] : overrides) {
        values[key] = value;
    }

    ResolvedInvocation invocation;
    invocation.model = descriptor.name;
    invocation.variant = chosen;
    invocation.container_image = descriptor.container_image;
    invocation.device = device;
    invocation.params = ParamBundle(values.begin(), values.end());

    values["IMAGE_DIR"] = paths.image_dir.string();
    values["METADATA_PATH"] = paths.metadata.string();
    values["OUTPUT_PATH"] = paths.output.string();
    values["DEVICE"] = std::string(to_string(device));

    for (const std::string& arg : descriptor.entrypoint_args) {
        invocation.args.push_back(substitute_placeholders(arg, values));
    }
    if (descriptor.local_entrypoint) {
        invocation.local_entrypoint = std::filesystem::absolute(
            descriptor.source_file.parent_path() / *descriptor.local_entrypoint);
    }
    return invocation;
}

} // namespace mammoeval
