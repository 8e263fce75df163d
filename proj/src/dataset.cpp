#include "mammoeval/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <utility>

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"

namespace mammoeval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ViewKey key) {
    switch (key) {
    case ViewKey::l_cc: return "L-CC";
    case ViewKey::r_cc: return "R-CC";
    case ViewKey::l_mlo: return "L-MLO";
    case ViewKey::r_mlo: return "R-MLO";
    }
    return "?";
}

std::optional<ViewKey> view_key_from_string(std::string_view name) {
    for (ViewKey key : kAllViews) {
        if (to_string(key) == name) {
            return key;
        }
    }
    return std::nullopt;
}

std::string_view to_string(BreastSide side) {
    return side == BreastSide::left ? "left" : "right";
}

BreastSide side_of(ViewKey key) {
    return (key == ViewKey::l_cc || key == ViewKey::l_mlo) ? BreastSide::left
                                                           : BreastSide::right;
}

std::string_view to_string(HorizontalFlip flip) {
    return flip == HorizontalFlip::yes ? "YES" : "NO";
}

std::size_t Exam::image_count() const {
    std::size_t n = 0;
    for (const auto& list : views) {
        n += list.size();
    }
    return n;
}

std::size_t Exam::image_count(BreastSide side) const {
    std::size_t n = 0;
    for (ViewKey key : kAllViews) {
        if (side_of(key) == side) {
            n += view(key).size();
        }
    }
    return n;
}

namespace {

// Shortened paths join below image_root; anything escaping it is rejected.
bool path_is_confined(std::string_view shortened) {
    if (shortened.empty() || shortened.front() == '/') {
        return false;
    }
    std::size_t start = 0;
    while (start <= shortened.size()) {
        std::size_t slash = shortened.find('/', start);
        std::string_view segment = shortened.substr(
            start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
        if (segment == "..") {
            return false;
        }
        if (slash == std::string_view::npos) {
            break;
        }
        start = slash + 1;
    }
    return true;
}

[[noreturn]] void schema_fail(std::size_t index, const std::string& detail) {
    throw SchemaError("exam " + std::to_string(index) + ": " + detail);
}

int parse_binary_label(const json& value, std::size_t index, const char* key) {
    if (!value.is_number_integer()) {
        schema_fail(index, std::string(key) + " must be an integer");
    }
    const auto v = value.get<long long>();
    if (v != 0 && v != 1) {
        schema_fail(index, std::string(key) + " must be 0 or 1, got " + std::to_string(v));
    }
    return static_cast<int>(v);
}

Exam parse_exam(const json& record, std::size_t index) {
    if (!record.is_object()) {
        schema_fail(index, "record must be an object");
    }

    static constexpr std::string_view known_keys[] = {"L-CC",         "R-CC",
                                                      "L-MLO",        "R-MLO",
                                                      "cancer_label", "horizontal_flip"};
    for (const auto& item : record.items()) {
        if (std::find(std::begin(known_keys), std::end(known_keys), item.key()) ==
            std::end(known_keys)) {
            schema_fail(index, "unknown key '" + item.key() + "'");
        }
    }
    for (std::string_view key : known_keys) {
        if (!record.contains(key)) {
            schema_fail(index, "missing key '" + std::string(key) + "'");
        }
    }

    Exam exam;
    exam.exam_id = static_cast<int>(index);

    for (ViewKey key : kAllViews) {
        const json& list = record.at(std::string(to_string(key)));
        if (!list.is_array()) {
            schema_fail(index, std::string(to_string(key)) + " must be a list of paths");
        }
        auto& target = exam.view(key);
        for (const json& entry : list) {
            if (!entry.is_string()) {
                schema_fail(index, std::string(to_string(key)) + " entries must be strings");
            }
            auto path = entry.get<std::string>();
            if (!path_is_confined(path)) {
                schema_fail(index, "image path escapes the image directory: '" + path + "'");
            }
            target.push_back(std::move(path));
        }
    }

    const json& label = record.at("cancer_label");
    if (!label.is_object()) {
        schema_fail(index, "cancer_label must be an object");
    }
    for (const auto& item : label.items()) {
        if (item.key() != "left_malignant" && item.key() != "right_malignant") {
            schema_fail(index, "unknown cancer_label key '" + item.key() + "'");
        }
    }
    if (!label.contains("left_malignant") || !label.contains("right_malignant")) {
        schema_fail(index, "cancer_label needs left_malignant and right_malignant");
    }
    exam.cancer_label.left_malignant =
        parse_binary_label(label.at("left_malignant"), index, "left_malignant");
    exam.cancer_label.right_malignant =
        parse_binary_label(label.at("right_malignant"), index, "right_malignant");

    const json& flip = record.at("horizontal_flip");
    if (!flip.is_string()) {
        schema_fail(index, "horizontal_flip must be a string");
    }
    const auto flip_value = flip.get<std::string>();
    if (flip_value == "YES") {
        exam.horizontal_flip = HorizontalFlip::yes;
    } else if (flip_value == "NO") {
        exam.horizontal_flip = HorizontalFlip::no;
    } else {
        schema_fail(index, "horizontal_flip must be YES or NO, got '" + flip_value + "'");
    }
    return exam;
}

} // namespace

std::vector<Exam> parse_exam_records(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DecodeError(std::string("malformed metadata document: ") + e.what());
    }
    if (!doc.is_array()) {
        throw SchemaError("metadata document must be a top-level array of exam records");
    }
    std::vector<Exam> exams;
    exams.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        exams.push_back(parse_exam(doc[i], i));
    }
    return exams;
}

std::string serialize_exam_records(std::span<const Exam> exams) {
    ordered_json doc = ordered_json::array();
    for (const Exam& exam : exams) {
        ordered_json record;
        for (ViewKey key : kAllViews) {
            record[std::string(to_string(key))] = exam.view(key);
        }
        ordered_json label;
        label["left_malignant"] = exam.cancer_label.left_malignant;
        label["right_malignant"] = exam.cancer_label.right_malignant;
        record["cancer_label"] = std::move(label);
        record["horizontal_flip"] = std::string(to_string(exam.horizontal_flip));
        doc.push_back(std::move(record));
    }
    return doc.dump(2) + "\n";
}

Dataset parse_metadata(const std::filesystem::path& file, std::filesystem::path image_root,
                       std::string name) {
    auto text = read_file(file);
    if (!text) {
        throw DecodeError("cannot read metadata file: " + file.string());
    }
    Dataset dataset;
    dataset.name = name.empty() ? file.stem().string() : std::move(name);
    dataset.image_root = std::move(image_root);
    dataset.exams = parse_exam_records(*text);
    return dataset;
}

std::string serialize_metadata(const Dataset& dataset) {
    return serialize_exam_records(dataset.exams);
}

std::size_t ValidationReport::error_count() const {
    std::size_t n = 0;
    for (const auto& issue : issues) {
        n += issue.fatal ? 1 : 0;
    }
    return n;
}

std::size_t ValidationReport::warning_count() const {
    return issues.size() - error_count();
}

ValidationReport validate_dataset(const Dataset& dataset) {
    ValidationReport report;
    report.exams_total = dataset.exams.size();
    for (const Exam& exam : dataset.exams) {
        for (ViewKey key : kAllViews) {
            for (const std::string& shortened : exam.view(key)) {
                ++report.images_total;
                if (resolve_image_path(dataset.image_root, shortened)) {
                    ++report.images_resolved;
                } else {
                    report.issues.push_back(
                        {true, exam.exam_id,
                         "image file not found: " + (dataset.image_root / shortened).string()});
                }
            }
        }
        if (exam.image_count() == 0) {
            report.issues.push_back({false, exam.exam_id,
                                     "exam " + std::to_string(exam.exam_id) + " has no images"});
        }
        for (BreastSide side : {BreastSide::left, BreastSide::right}) {
            if (exam.image_count(side) == 0) {
                report.issues.push_back({false, exam.exam_id,
                                         std::string(to_string(side)) +
                                             " breast has no images for exam " +
                                             std::to_string(exam.exam_id)});
            }
        }
    }
    return report;
}

std::optional<std::filesystem::path> resolve_image_path(const std::filesystem::path& root,
                                                        std::string_view shortened) {
    std::error_code ec;
    std::filesystem::path direct = root / std::filesystem::path(std::string(shortened));
    if (std::filesystem::is_regular_file(direct, ec)) {
        return direct;
    }
    std::filesystem::path with_ext = direct;
    with_ext += ".png";
    if (std::filesystem::is_regular_file(with_ext, ec)) {
        return with_ext;
    }
    return std::nullopt;
}

} // namespace mammoeval
