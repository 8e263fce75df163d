#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mammoeval {

/// The four standard screening views. String forms are the exact metadata
/// key names and must not change.
enum class ViewKey { l_cc, r_cc, l_mlo, r_mlo };

inline constexpr std::array<ViewKey, 4> kAllViews = {ViewKey::l_cc, ViewKey::r_cc,
                                                     ViewKey::l_mlo, ViewKey::r_mlo};

std::string_view to_string(ViewKey key);
std::optional<ViewKey> view_key_from_string(std::string_view name);

enum class BreastSide { left, right };

std::string_view to_string(BreastSide side);
BreastSide side_of(ViewKey key);

enum class HorizontalFlip { yes, no };

std::string_view to_string(HorizontalFlip flip);

struct CancerLabel {
    int left_malignant = 0;
    int right_malignant = 0;

    bool operator==(const CancerLabel&) const = default;
};

/// One screening exam: per-view lists of shortened image paths (may be
/// empty, never missing), per-breast labels, and the orientation flag.
struct Exam {
    int exam_id = 0; // position in the metadata file
    std::array<std::vector<std::string>, 4> views{};
    CancerLabel cancer_label;
    HorizontalFlip horizontal_flip = HorizontalFlip::no;

    const std::vector<std::string>& view(ViewKey key) const {
        return views[static_cast<std::size_t>(key)];
    }
    std::vector<std::string>& view(ViewKey key) {
        return views[static_cast<std::size_t>(key)];
    }

    int label_for(BreastSide side) const {
        return side == BreastSide::left ? cancer_label.left_malignant
                                        : cancer_label.right_malignant;
    }

    std::size_t image_count() const;
    std::size_t image_count(BreastSide side) const;

    bool operator==(const Exam&) const = default;
};

struct Dataset {
    std::string name;
    std::filesystem::path image_root;
    std::vector<Exam> exams;

    bool operator==(const Dataset&) const = default;
};

/// Decode the metadata document: a UTF-8 JSON array of exam records with
/// exactly the keys "L-CC", "R-CC", "L-MLO", "R-MLO", "cancer_label"
/// and "horizontal_flip". Missing keys are fatal; empty view lists are
/// legal. Throws DecodeError on malformed JSON, SchemaError on any
/// schema violation.
std::vector<Exam> parse_exam_records(std::string_view text);

/// Canonical encoder; parse_exam_records(serialize_exam_records(e)) == e.
std::string serialize_exam_records(std::span<const Exam> exams);

/// Reads and decodes a metadata file. `name` defaults to the file stem.
Dataset parse_metadata(const std::filesystem::path& file,
                       std::filesystem::path image_root = {},
                       std::string name = {});

std::string serialize_metadata(const Dataset& dataset);

struct ValidationIssue {
    bool fatal = false;
    int exam_id = -1; // -1: dataset-wide
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::size_t exams_total = 0;
    std::size_t images_total = 0;
    std::size_t images_resolved = 0;

    bool ok() const { return error_count() == 0; }
    std::size_t error_count() const;
    std::size_t warning_count() const;
};

/// Pre-flight check before any model run. Missing image files are fatal;
/// exams or breasts without images are warnings (metric joining drops
/// such breasts later).
ValidationReport validate_dataset(const Dataset& dataset);

/// <root>/<shortened> if that file exists, else <root>/<shortened>.png.
std::optional<std::filesystem::path>
resolve_image_path(const std::filesystem::path& root, std::string_view shortened);

} // namespace mammoeval
