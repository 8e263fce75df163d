#include "mammoeval/predictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"

namespace mammoeval {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
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
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::optional<double> parse_number(std::string_view field) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        return std::nullopt;
    }
    return value;
}

double parse_probability(std::string_view field, std::size_t row, const char* column) {
    const auto value = parse_number(field);
    if (!value || !std::isfinite(*value) || *value < 0.0 || *value > 1.0) {
        throw BadValueError("row " + std::to_string(row) + ": " + column +
                            " must be a probability in [0, 1], got '" + std::string(field) + "'");
    }
    return *value;
}

void check_header(std::string_view line, std::string_view expected) {
    if (line != expected) {
        throw HeaderError("expected header '" + std::string(expected) + "', got '" +
                          std::string(line) + "'");
    }
}

struct ImageRef {
    int exam_id;
    ViewKey view;
    int occurrences; // >1 means the shortened path is ambiguous
};

std::unordered_map<std::string, ImageRef> build_image_index(const Dataset& dataset) {
    std::unordered_map<std::string, ImageRef> index;
    for (const Exam& exam : dataset.exams) {
        for (ViewKey key : kAllViews) {
            for (const std::string& shortened : exam.view(key)) {
                auto [it, inserted] = index.try_emplace(shortened, ImageRef{exam.exam_id, key, 1});
                if (!inserted) {
                    ++it->second.occurrences;
                }
            }
        }
    }
    return index;
}

} // namespace

ImageCsv parse_image_csv(std::string_view text, const Dataset& dataset) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw HeaderError("empty predictions file; expected header '" +
                          std::string(kImageCsvHeader) + "'");
    }
    check_header(lines[0], kImageCsvHeader);

    const auto index = build_image_index(dataset);

    ImageCsv out;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto fields = split_fields(lines[row]);
        if (fields.size() != 3) {
            throw BadValueError("row " + std::to_string(row) + ": expected 3 fields, got " +
                                std::to_string(fields.size()));
        }
        ImagePrediction pred;
        pred.image_index = std::string(fields[0]);

        const auto ref = index.find(pred.image_index);
        if (ref == index.end()) {
            throw UnknownImageError("row " + std::to_string(row) + ": unknown image_index '" +
                                    pred.image_index + "'");
        }
        if (ref->second.occurrences != 1) {
            throw UnknownImageError("row " + std::to_string(row) + ": image_index '" +
                                    pred.image_index + "' is ambiguous in the dataset");
        }
        if (!seen.emplace(pred.image_index, row).second) {
            throw BadValueError("row " + std::to_string(row) + ": duplicate image_index '" +
                                pred.image_index + "'");
        }

        pred.malignant_pred = parse_probability(fields[1], row, "malignant_pred");

        const auto file_label = parse_number(fields[2]);
        if (!file_label || (*file_label != 0.0 && *file_label != 1.0)) {
            throw BadValueError("row " + std::to_string(row) +
                                ": malignant_label must be 0 or 1, got '" + std::string(fields[2]) +
                                "'");
        }

        pred.exam_id = ref->second.exam_id;
        pred.view = ref->second.view;
        pred.side = side_of(ref->second.view);
        // The dataset is authoritative for labels; the column is only checked.
        pred.malignant_label = dataset.exams[pred.exam_id].label_for(pred.side);
        if (static_cast<int>(*file_label) != pred.malignant_label) {
            out.warnings.push_back("row " + std::to_string(row) + ": file label " +
                                   std::to_string(static_cast<int>(*file_label)) +
                                   " disagrees with dataset label " +
                                   std::to_string(pred.malignant_label) + " for '" +
                                   pred.image_index + "'; using the dataset label");
        }
        out.rows.push_back(std::move(pred));
    }
    return out;
}

BreastCsv parse_breast_csv(std::string_view text, const Dataset& dataset) {
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw HeaderError("empty predictions file; expected header '" +
                          std::string(kBreastCsvHeader) + "'");
    }
    check_header(lines[0], kBreastCsvHeader);

    const std::size_t rows = lines.size() - 1;
    if (rows != dataset.exams.size()) {
        throw RowCountMismatchError("expected " + std::to_string(dataset.exams.size()) +
                                    " rows (one per exam), got " + std::to_string(rows));
    }

    BreastCsv out;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto fields = split_fields(lines[row]);
        if (fields.size() != 3) {
            throw BadValueError("row " + std::to_string(row) + ": expected 3 fields, got " +
                                std::to_string(fields.size()));
        }
        // Row order joins to exam order; the index column is ignored but
        // must still be numeric.
        if (!parse_number(fields[0])) {
            throw BadValueError("row " + std::to_string(row) + ": index must be numeric, got '" +
                                std::string(fields[0]) + "'");
        }
        const Exam& exam = dataset.exams[row - 1];
        const double left = parse_probability(fields[1], row, "left_malignant");
        const double right = parse_probability(fields[2], row, "right_malignant");
        out.rows.push_back({exam.exam_id, BreastSide::left, left,
                            exam.cancer_label.left_malignant,
                            exam.image_count(BreastSide::left)});
        out.rows.push_back({exam.exam_id, BreastSide::right, right,
                            exam.cancer_label.right_malignant,
                            exam.image_count(BreastSide::right)});
    }
    return out;
}

Aggregation aggregate_to_breast(std::span<const ImagePrediction> predictions,
                                const Dataset& dataset) {
    std::map<std::pair<int, BreastSide>, std::pair<double, std::size_t>> sums;
    for (const ImagePrediction& pred : predictions) {
        auto& [sum, count] = sums[{pred.exam_id, pred.side}];
        sum += pred.malignant_pred;
        ++count;
    }

    Aggregation out;
    for (const Exam& exam : dataset.exams) {
        for (BreastSide side : {BreastSide::left, BreastSide::right}) {
            const std::size_t available = exam.image_count(side);
            const auto it = sums.find({exam.exam_id, side});
            const std::size_t scored = it == sums.end() ? 0 : it->second.second;
            if (scored == 0) {
                out.exclusions.push_back("exam " + std::to_string(exam.exam_id) + ": " +
                                         std::string(to_string(side)) + " breast has no " +
                                         (available == 0 ? "images" : "scored images"));
                continue;
            }
            if (scored != available) {
                out.warnings.push_back("exam " + std::to_string(exam.exam_id) + ": " +
                                       std::string(to_string(side)) + " breast has " +
                                       std::to_string(available) + " images but " +
                                       std::to_string(scored) + " were scored");
            }
            out.breasts.push_back({exam.exam_id, side, it->second.first / scored,
                                   exam.label_for(side), scored});
        }
    }
    return out;
}

PredictionSet load_prediction_set(const std::filesystem::path& csv, const Dataset& dataset,
                                  Granularity granularity) {
    const auto text = read_file(csv);
    if (!text) {
        throw HeaderError("cannot read predictions file: " + csv.string());
    }

    PredictionSet set;
    set.granularity = granularity;
    if (granularity == Granularity::image_level) {
        ImageCsv parsed = parse_image_csv(*text, dataset);
        Aggregation agg = aggregate_to_breast(parsed.rows, dataset);
        set.image_predictions = std::move(parsed.rows);
        set.breast_predictions = std::move(agg.breasts);
        set.exclusions = std::move(agg.exclusions);
        set.warnings = std::move(parsed.warnings);
        set.warnings.insert(set.warnings.end(), agg.warnings.begin(), agg.warnings.end());
    } else {
        BreastCsv parsed = parse_breast_csv(*text, dataset);
        set.warnings = std::move(parsed.warnings);
        for (BreastPrediction& pred : parsed.rows) {
            if (pred.n_images == 0) {
                set.exclusions.push_back(
                    "exam " + std::to_string(pred.exam_id) + ": " +
                    std::string(to_string(pred.side)) +
                    " breast has no images; prediction dropped from scoring");
                continue;
            }
            set.breast_predictions.push_back(pred);
        }
    }
    return set;
}

std::string write_image_csv(std::span<const ImagePrediction> rows) {
    std::string out(kImageCsvHeader);
    out.push_back('\n');
    char buffer[64];
    for (const ImagePrediction& row : rows) {
        std::snprintf(buffer, sizeof buffer, ",%.4f,%d\n", row.malignant_pred,
                      row.malignant_label);
        out += row.image_index;
        out += buffer;
    }
    return out;
}

std::string write_breast_csv(std::span<const BreastPrediction> rows) {
    std::map<int, std::pair<std::optional<double>, std::optional<double>>> by_exam;
    for (const BreastPrediction& row : rows) {
        auto& slot = by_exam[row.exam_id];
        (row.side == BreastSide::left ? slot.first : slot.second) = row.score;
    }
    std::string out(kBreastCsvHeader);
    out.push_back('\n');
    char buffer[96];
    std::size_t index = 0;
    for (const auto& [exam_id, scores] : by_exam) {
        if (!scores.first || !scores.second) {
            throw BadValueError("exam " + std::to_string(exam_id) +
                                ": breast CSV needs both left and right scores");
        }
        std::snprintf(buffer, sizeof buffer, "%zu,%.4f,%.4f\n", index, *scores.first,
                      *scores.second);
        out += buffer;
        ++index;
    }
    return out;
}

std::vector<ScoredSample> breast_samples(std::span<const BreastPrediction> preds) {
    std::vector<ScoredSample> samples;
    samples.reserve(preds.size());
    for (const BreastPrediction& pred : preds) {
        samples.push_back({pred.score, pred.label});
    }
    return samples;
}

std::vector<ScoredSample> image_samples(std::span<const ImagePrediction> preds) {
    std::vector<ScoredSample> samples;
    samples.reserve(preds.size());
    for (const ImagePrediction& pred : preds) {
        samples.push_back({pred.malignant_pred, pred.malignant_label});
    }
    return samples;
}

} // namespace mammoeval
