#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mammoeval/metrics.hpp"
#include "mammoeval/registry.hpp"
#include "mammoeval/runner.hpp"

namespace mammoeval {

/// One evaluation run's output: manifest, metric results, exclusion log.
/// One document per (model, variant, dataset, seed); the filename is
/// content-addressed (timestamps excluded from the hash so repeated runs
/// of a deterministic model land on the same name).
struct ResultsDocument {
    std::string harness_version;
    std::string model;
    std::string variant;
    std::string dataset;
    Granularity granularity = Granularity::breast_level;
    std::uint64_t seed = 0;
    RunManifest manifest;
    std::vector<MetricResult> metrics;
    std::vector<std::string> exclusions;
    std::vector<std::string> warnings;
    std::optional<std::string> note; // rendered as a scoreboard footnote
};

nlohmann::ordered_json results_to_json(const ResultsDocument& doc);
ResultsDocument results_from_json(const nlohmann::json& j);

std::string results_content_hash(const ResultsDocument& doc);
std::string results_filename(const ResultsDocument& doc);

std::filesystem::path write_results_document(const ResultsDocument& doc,
                                             const std::filesystem::path& dir);
ResultsDocument read_results_document(const std::filesystem::path& file);

/// "x,y" rows, one per curve point.
std::string curve_csv(const MetricResult& result);

/// Standalone SVG plot of the curve.
std::string curve_svg(const MetricResult& result);

/// Writes <stem>__<level>_<roc|pr>.csv/.svg for every metric with curve
/// points; returns the written paths.
std::vector<std::filesystem::path> write_curves(const ResultsDocument& doc,
                                                const std::filesystem::path& dir);

struct ScoreboardEntry {
    ResultsDocument doc;
    std::string source; // filename, for footnotes
};

/// Markdown table: rows = dataset x {ROC, PR}, columns = model variants in
/// registry order, cells = "point (low-high)" at breast level, absent
/// pairs rendered "N/A". Duplicate (model, variant, dataset) entries are
/// resolved by newest manifest finish time; superseded ones are listed in
/// the footnotes together with document notes.
std::string render_scoreboard(std::vector<ScoreboardEntry> entries,
                              std::span<const ModelDescriptor> registry);

std::string render_scoreboard_dir(const std::filesystem::path& results_dir,
                                  const std::filesystem::path& registry_dir);

} // namespace mammoeval
