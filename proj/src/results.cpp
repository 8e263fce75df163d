#include "mammoeval/results.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "mammoeval/errors.hpp"
#include "mammoeval/util.hpp"

namespace mammoeval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json metric_to_json(const MetricResult& r) {
    ordered_json j;
    j["metric"] = std::string(to_string(r.metric));
    j["level"] = std::string(to_string(r.level));
    j["point"] = r.point;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["formatted"] = format_point_ci(r.point, r.ci_low, r.ci_high);
    j["n_samples"] = r.n_samples;
    j["n_positives"] = r.n_positives;
    j["replicates"] = r.n_replicates;
    j["skipped_replicates"] = r.n_skipped;
    ordered_json curve = ordered_json::array();
    for (const CurvePoint& p : r.curve) {
        curve.push_back(ordered_json::array({p.x, p.y}));
    }
    j["curve"] = std::move(curve);
    return j;
}

MetricResult metric_from_json(const json& j) {
    MetricResult r;
    const auto kind = metric_kind_from_string(j.value("metric", std::string{}));
    const auto level = metric_level_from_string(j.value("level", std::string{}));
    if (!kind || !level) {
        throw DecodeError("results document has an unknown metric or level");
    }
    r.metric = *kind;
    r.level = *level;
    r.point = j.value("point", 0.0);
    r.ci_low = j.value("ci_low", 0.0);
    r.ci_high = j.value("ci_high", 0.0);
    r.n_samples = j.value("n_samples", std::size_t{0});
    r.n_positives = j.value("n_positives", std::size_t{0});
    r.n_replicates = j.value("replicates", std::size_t{0});
    r.n_skipped = j.value("skipped_replicates", std::size_t{0});
    if (j.contains("curve")) {
        for (const auto& p : j.at("curve")) {
            r.curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        }
    }
    return r;
}

} // namespace

ordered_json results_to_json(const ResultsDocument& doc) {
    ordered_json j;
    j["schema"] = "mammoeval-results-v1";
    j["harness_version"] = doc.harness_version;
    j["model"] = doc.model;
    j["variant"] = doc.variant;
    j["dataset"] = doc.dataset;
    j["granularity"] = std::string(to_string(doc.granularity));
    j["seed"] = doc.seed;
    j["manifest"] = manifest_to_json(doc.manifest);
    ordered_json metrics = ordered_json::array();
    for (const MetricResult& r : doc.metrics) {
        metrics.push_back(metric_to_json(r));
    }
    j["metrics"] = std::move(metrics);
    j["exclusions"] = doc.exclusions;
    j["warnings"] = doc.warnings;
    if (doc.note) {
        j["note"] = *doc.note;
    }
    return j;
}

ResultsDocument results_from_json(const json& j) {
    ResultsDocument doc;
    doc.harness_version = j.value("harness_version", std::string{});
    doc.model = j.value("model", std::string{});
    doc.variant = j.value("variant", std::string{});
    doc.dataset = j.value("dataset", std::string{});
    if (const auto g = granularity_from_string(j.value("granularity", std::string{}))) {
        doc.granularity = *g;
    }
    doc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("manifest")) {
        doc.manifest = manifest_from_json(j.at("manifest"));
    }
    if (j.contains("metrics")) {
        for (const auto& m : j.at("metrics")) {
            doc.metrics.push_back(metric_from_json(m));
        }
    }
    doc.exclusions = j.value("exclusions", std::vector<std::string>{});
    doc.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("note") && j.at("note").is_string()) {
        doc.note = j.at("note").get<std::string>();
    }
    return doc;
}

std::string results_content_hash(const ResultsDocument& doc) {
    ordered_json j = results_to_json(doc);
    // Timestamps are provenance, not content: repeated runs of a
    // deterministic model must land on the same filename.
    j["manifest"]["started_at"] = "";
    j["manifest"]["finished_at"] = "";
    return sha256_hex(j.dump());
}

std::string results_filename(const ResultsDocument& doc) {
    std::string name = sanitize_token(doc.model);
    if (!doc.variant.empty()) {
        name += "__" + sanitize_token(doc.variant);
    }
    name += "__" + sanitize_token(doc.dataset);
    name += "__" + results_content_hash(doc).substr(0, 12);
    return name + ".json";
}

std::filesystem::path write_results_document(const ResultsDocument& doc,
                                             const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / results_filename(doc);
    write_file_atomic(path, results_to_json(doc).dump(2) + "\n");
    return path;
}

ResultsDocument read_results_document(const std::filesystem::path& file) {
    const auto text = read_file(file);
    if (!text) {
        throw DecodeError("cannot read results document: " + file.string());
    }
    try {
        return results_from_json(json::parse(*text));
    } catch (const json::parse_error& e) {
        throw DecodeError("malformed results document " + file.string() + ": " + e.what());
    }
}

std::string curve_csv(const MetricResult& result) {
    std::string out = "x,y\n";
    for (const CurvePoint& p : result.curve) {
        out += format_fixed(p.x, 6) + "," + format_fixed(p.y, 6) + "\n";
    }
    return out;
}

std::string curve_svg(const MetricResult& result) {
    const bool roc = result.metric == MetricKind::auc_roc;
    const double width = 480, height = 480, margin = 56;
    const double plot = width - 2 * margin;
    const auto sx = [&](double x) { return margin + x * plot; };
    const auto sy = [&](double y) { return height - margin - y * plot; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    svg << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\""
        << sy(0) << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\""
        << sy(1) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        svg << "  <text x=\"" << sx(v) << "\" y=\"" << sy(0) + 20
            << "\" font-size=\"11\" text-anchor=\"middle\">" << format_fixed(v, 2) << "</text>\n";
        svg << "  <text x=\"" << sx(0) - 8 << "\" y=\"" << sy(v) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << format_fixed(v, 2) << "</text>\n";
    }
    if (roc) {
        svg << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1)
            << "\" y2=\"" << sy(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    }
    svg << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const CurvePoint& p : result.curve) {
        svg << format_fixed(sx(p.x), 2) << "," << format_fixed(sy(p.y), 2) << " ";
    }
    svg << "\"/>\n";
    const std::string title = std::string(roc ? "ROC" : "Precision-Recall") + " (" +
                              std::string(to_string(result.level)) + " level), AUC " +
                              format_fixed(result.point, 3);
    svg << "  <text x=\"" << width / 2 << "\" y=\"" << margin - 24
        << "\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
    svg << "  <text x=\"" << width / 2 << "\" y=\"" << height - 14
        << "\" font-size=\"12\" text-anchor=\"middle\">"
        << (roc ? "False positive rate" : "Recall") << "</text>\n";
    svg << "  <text x=\"16\" y=\"" << height / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << height / 2
        << ")\">" << (roc ? "True positive rate" : "Precision") << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> write_curves(const ResultsDocument& doc,
                                                const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string stem = sanitize_token(doc.model);
    if (!doc.variant.empty()) {
        stem += "__" + sanitize_token(doc.variant);
    }
    stem += "__" + sanitize_token(doc.dataset);

    std::vector<std::filesystem::path> written;
    for (const MetricResult& r : doc.metrics) {
        if (r.curve.empty()) {
            continue;
        }
        const std::string suffix = std::string(to_string(r.level)) + "_" +
                                   (r.metric == MetricKind::auc_roc ? "roc" : "pr");
        const auto csv_path = dir / (stem + "__" + suffix + ".csv");
        const auto svg_path = dir / (stem + "__" + suffix + ".svg");
        write_file_atomic(csv_path, curve_csv(r));
        write_file_atomic(svg_path, curve_svg(r));
        written.push_back(csv_path);
        written.push_back(svg_path);
    }
    return written;
}

namespace {

// Fixed scoreboard row order for the bundled datasets; anything else is
// appended alphabetically.
constexpr std::string_view kDatasetOrder[] = {"NYU Reader Study", "NYU Test Set", "INbreast",
                                              "DDSM",             "CMMD",         "OPTIMAM",
                                              "CSAW-CC"};

std::size_t dataset_rank(const std::string& name) {
    for (std::size_t i = 0; i < std::size(kDatasetOrder); ++i) {
        if (kDatasetOrder[i] == name) {
            return i;
        }
    }
    return std::size(kDatasetOrder);
}

const MetricResult* find_breast_metric(const ResultsDocument& doc, MetricKind kind) {
    for (const MetricResult& r : doc.metrics) {
        if (r.metric == kind && r.level == MetricLevel::breast) {
            return &r;
        }
    }
    return nullptr;
}

} // namespace

std::string render_scoreboard(std::vector<ScoreboardEntry> entries,
                              std::span<const ModelDescriptor> registry) {
    using ColumnKey = std::pair<std::string, std::string>; // (model, variant)

    std::vector<std::string> footnotes;

    // Newest finish time wins per (model, variant, dataset); ISO-8601
    // strings compare chronologically.
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> chosen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto key = std::make_tuple(entries[i].doc.model, entries[i].doc.variant,
                                         entries[i].doc.dataset);
        const auto it = chosen.find(key);
        if (it == chosen.end()) {
            chosen[key] = i;
            continue;
        }
        const auto newer = [&](std::size_t a, std::size_t b) {
            const auto& ma = entries[a].doc.manifest;
            const auto& mb = entries[b].doc.manifest;
            if (ma.finished_at != mb.finished_at) {
                return ma.finished_at > mb.finished_at;
            }
            return entries[a].source > entries[b].source; // deterministic tie-break
        };
        const std::size_t loser = newer(i, it->second) ? it->second : i;
        const std::size_t winner = loser == i ? it->second : i;
        footnotes.push_back("superseded result: " + entries[loser].source + " (finished " +
                            (entries[loser].doc.manifest.finished_at.empty()
                                 ? "unknown"
                                 : entries[loser].doc.manifest.finished_at) +
                            ")");
        chosen[key] = winner;
    }

    std::map<ColumnKey, const ResultsDocument*> cell_index; // keyed with dataset below
    std::map<std::tuple<std::string, std::string, std::string>, const ResultsDocument*> cells;
    std::set<ColumnKey> present_columns;
    std::set<std::string> datasets;
    for (const auto& [key, index] : chosen) {
        const ResultsDocument& doc = entries[index].doc;
        cells[key] = &doc;
        present_columns.insert({doc.model, doc.variant});
        datasets.insert(doc.dataset);
        if (doc.note && !doc.note->empty()) {
            footnotes.push_back(*doc.note);
        }
    }
    (void)cell_index;

    // Columns: registry order (name-sorted descriptors, declared variant
    // order), then any out-of-registry pairs alphabetically.
    std::vector<std::pair<ColumnKey, std::string>> columns; // key -> label
    std::set<ColumnKey> placed;
    for (const ModelDescriptor& desc : registry) {
        if (desc.variants.empty()) {
            const ColumnKey key{desc.name, ""};
            if (present_columns.count(key)) {
                columns.push_back({key, desc.column_label("")});
                placed.insert(key);
            }
            continue;
        }
        for (const auto& [vname, spec] : desc.variants) {
            const ColumnKey key{desc.name, vname};
            if (present_columns.count(key)) {
                columns.push_back({key, desc.column_label(vname)});
                placed.insert(key);
            }
        }
    }
    for (const ColumnKey& key : present_columns) {
        if (!placed.count(key)) {
            const std::string label =
                key.second.empty() ? key.first : key.first + " (" + key.second + ")";
            columns.push_back({key, label});
        }
    }

    std::vector<std::string> ordered_datasets(datasets.begin(), datasets.end());
    std::stable_sort(ordered_datasets.begin(), ordered_datasets.end(),
                     [](const std::string& a, const std::string& b) {
                         const auto ra = dataset_rank(a);
                         const auto rb = dataset_rank(b);
                         return ra != rb ? ra < rb : a < b;
                     });

    std::ostringstream out;
    out << "# Scoreboard\n\n";
    out << "Breast-level AUC with 95% bootstrap confidence intervals.\n\n";
    out << "| Data set | AUC |";
    for (const auto& [key, label] : columns) {
        out << " " << label << " |";
    }
    out << "\n|---|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << "---|";
    }
    out << "\n";

    for (const std::string& dataset : ordered_datasets) {
        for (MetricKind kind : {MetricKind::auc_roc, MetricKind::auc_pr}) {
            out << "| " << dataset << " | " << (kind == MetricKind::auc_roc ? "ROC" : "PR")
                << " |";
            for (const auto& [key, label] : columns) {
                const auto it = cells.find({key.first, key.second, dataset});
                const MetricResult* metric =
                    it == cells.end() ? nullptr : find_breast_metric(*it->second, kind);
                if (metric) {
                    out << " " << format_point_ci(metric->point, metric->ci_low, metric->ci_high)
                        << " |";
                } else {
                    out << " N/A |";
                }
            }
            out << "\n";
        }
    }

    if (!footnotes.empty()) {
        std::vector<std::string> unique;
        std::set<std::string> seen;
        for (const std::string& note : footnotes) {
            if (seen.insert(note).second) {
                unique.push_back(note);
            }
        }
        out << "\nNotes:\n";
        for (const std::string& note : unique) {
            out << "- " << note << "\n";
        }
    }
    return out.str();
}

std::string render_scoreboard_dir(const std::filesystem::path& results_dir,
                                  const std::filesystem::path& registry_dir) {
    std::vector<ScoreboardEntry> entries;
    std::error_code ec;
    if (std::filesystem::is_directory(results_dir, ec)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(results_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            entries.push_back({read_results_document(file), file.filename().string()});
        }
    }
    std::vector<ModelDescriptor> registry;
    if (std::filesystem::is_directory(registry_dir, ec)) {
        registry = load_registry(registry_dir);
    }
    return render_scoreboard(std::move(entries), registry);
}

} // namespace mammoeval
