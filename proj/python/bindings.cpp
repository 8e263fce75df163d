#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mammoeval/dataset.hpp"
#include "mammoeval/harness.hpp"
#include "mammoeval/image.hpp"
#include "mammoeval/metrics.hpp"
#include "mammoeval/predictions.hpp"
#include "mammoeval/version.hpp"

namespace py = pybind11;
using namespace mammoeval;

namespace {

std::vector<ScoredSample> make_samples(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw py::value_error("scores and labels must have the same length");
    }
    std::vector<ScoredSample> samples(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        samples[i] = {scores[i], labels[i]};
    }
    return samples;
}

py::list curve_to_list(const std::vector<CurvePoint>& curve) {
    py::list out;
    for (const CurvePoint& p : curve) {
        out.append(py::make_tuple(p.x, p.y));
    }
    return out;
}

py::dict metric_to_dict(const MetricResult& r) {
    py::dict d;
    d["metric"] = std::string(to_string(r.metric));
    d["level"] = std::string(to_string(r.level));
    d["point"] = r.point;
    d["ci_low"] = r.ci_low;
    d["ci_high"] = r.ci_high;
    d["formatted"] = format_point_ci(r.point, r.ci_low, r.ci_high);
    d["n_samples"] = r.n_samples;
    d["n_positives"] = r.n_positives;
    d["replicates"] = r.n_replicates;
    d["skipped_replicates"] = r.n_skipped;
    d["curve"] = curve_to_list(r.curve);
    return d;
}

EvaluationConfig make_config(std::size_t replicates, double confidence, std::uint64_t seed,
                             std::size_t max_redraws, unsigned threads) {
    EvaluationConfig cfg;
    cfg.n_replicates = replicates;
    cfg.confidence = confidence;
    cfg.master_seed = seed;
    cfg.max_redraws = max_redraws;
    cfg.threads = threads;
    return cfg;
}

ImageU16 image_from_array(const py::array_t<std::uint16_t>& array) {
    const auto buffer = array.request();
    if (buffer.ndim != 2) {
        throw py::value_error("expected a 2-D uint16 array");
    }
    ImageU16 image;
    image.height = static_cast<std::size_t>(buffer.shape[0]);
    image.width = static_cast<std::size_t>(buffer.shape[1]);
    image.pixels.resize(image.width * image.height);
    const auto view = array.unchecked<2>();
    for (std::size_t r = 0; r < image.height; ++r) {
        for (std::size_t c = 0; c < image.width; ++c) {
            image.pixels[r * image.width + c] = view(r, c);
        }
    }
    return image;
}

py::array_t<std::uint16_t> image_to_array(const ImageU16& image) {
    py::array_t<std::uint16_t> out({image.height, image.width});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t r = 0; r < image.height; ++r) {
        for (std::size_t c = 0; c < image.width; ++c) {
            view(r, c) = image.pixels[r * image.width + c];
        }
    }
    return out;
}

py::list exams_to_list(const std::vector<Exam>& exams) {
    py::list out;
    for (const Exam& exam : exams) {
        py::dict record;
        for (ViewKey key : kAllViews) {
            record[py::str(std::string(to_string(key)))] = exam.view(key);
        }
        py::dict label;
        label["left_malignant"] = exam.cancer_label.left_malignant;
        label["right_malignant"] = exam.cancer_label.right_malignant;
        record["cancer_label"] = label;
        record["horizontal_flip"] = std::string(to_string(exam.horizontal_flip));
        out.append(record);
    }
    return out;
}

py::dict score_csv_text(const std::string& csv_text, const std::string& metadata_text,
                        Granularity granularity, std::size_t replicates, double confidence,
                        std::uint64_t seed, unsigned threads) {
    Dataset dataset;
    dataset.name = "inline";
    dataset.exams = parse_exam_records(metadata_text);

    PredictionSet set;
    set.granularity = granularity;
    if (granularity == Granularity::image_level) {
        ImageCsv parsed = parse_image_csv(csv_text, dataset);
        Aggregation agg = aggregate_to_breast(parsed.rows, dataset);
        set.image_predictions = std::move(parsed.rows);
        set.breast_predictions = std::move(agg.breasts);
        set.exclusions = std::move(agg.exclusions);
    } else {
        BreastCsv parsed = parse_breast_csv(csv_text, dataset);
        for (const BreastPrediction& pred : parsed.rows) {
            if (pred.n_images > 0) {
                set.breast_predictions.push_back(pred);
            } else {
                set.exclusions.push_back("exam " + std::to_string(pred.exam_id) +
                                         ": breast without images dropped");
            }
        }
    }

    const auto cfg = make_config(replicates, confidence, seed, 100, threads);
    py::dict out;
    py::list metrics;
    for (const MetricResult& r : evaluate_prediction_set(set, cfg)) {
        metrics.append(metric_to_dict(r));
    }
    out["metrics"] = metrics;
    out["exclusions"] = set.exclusions;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Screening-mammography evaluation primitives";
    m.attr("__version__") = kVersion;

    m.def(
        "auc_roc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return auc_roc(make_samples(scores, labels));
        },
        py::arg("scores"), py::arg("labels"),
        "Non-parametric AUC ROC (pairwise, ties at half credit).");

    m.def(
        "auc_pr",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return auc_pr(make_samples(scores, labels));
        },
        py::arg("scores"), py::arg("labels"),
        "Step-wise average precision over tie groups.");

    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return curve_to_list(roc_curve(make_samples(scores, labels)));
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "pr_curve",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return curve_to_list(pr_curve(make_samples(scores, labels)));
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "bootstrap_ci",
        [](const std::vector<double>& scores, const std::vector<int>& labels,
           const std::string& metric, std::size_t replicates, double confidence,
           std::uint64_t seed, std::size_t max_redraws, unsigned threads) {
            const auto kind = metric_kind_from_string(metric);
            if (!kind) {
                throw py::value_error("metric must be AUC_ROC or AUC_PR");
            }
            const auto cfg = make_config(replicates, confidence, seed, max_redraws, threads);
            return metric_to_dict(
                bootstrap_ci(make_samples(scores, labels), *kind, MetricLevel::breast, cfg));
        },
        py::arg("scores"), py::arg("labels"), py::arg("metric") = "AUC_ROC",
        py::arg("replicates") = 2000, py::arg("confidence") = 0.95, py::arg("seed") = 0,
        py::arg("max_redraws") = 100, py::arg("threads") = 0,
        "Seeded percentile bootstrap; deterministic for a given seed.");

    m.def(
        "rescale_to_16bit",
        [](const py::array_t<std::uint16_t>& pixels, int source_depth) {
            return image_to_array(rescale_to_16bit(image_from_array(pixels), source_depth));
        },
        py::arg("pixels"), py::arg("source_depth"));

    m.def(
        "apply_horizontal_flip",
        [](const py::array_t<std::uint16_t>& pixels, const std::string& flip) {
            if (flip != "YES" && flip != "NO") {
                throw py::value_error("flip must be YES or NO");
            }
            return image_to_array(apply_horizontal_flip(
                image_from_array(pixels),
                flip == "YES" ? HorizontalFlip::yes : HorizontalFlip::no));
        },
        py::arg("pixels"), py::arg("flip"));

    m.def(
        "parse_metadata_text",
        [](const std::string& text) { return exams_to_list(parse_exam_records(text)); },
        py::arg("text"), "Decode a metadata document into a list of exam dicts.");

    m.def(
        "canonical_metadata_text",
        [](const std::string& text) {
            const auto exams = parse_exam_records(text);
            return serialize_exam_records(exams);
        },
        py::arg("text"), "Parse and re-serialize a metadata document in canonical form.");

    m.def(
        "score_breast_csv",
        [](const std::string& csv_text, const std::string& metadata_text, std::size_t replicates,
           double confidence, std::uint64_t seed, unsigned threads) {
            return score_csv_text(csv_text, metadata_text, Granularity::breast_level, replicates,
                                  confidence, seed, threads);
        },
        py::arg("csv_text"), py::arg("metadata_text"), py::arg("replicates") = 2000,
        py::arg("confidence") = 0.95, py::arg("seed") = 0, py::arg("threads") = 0);

    m.def(
        "score_image_csv",
        [](const std::string& csv_text, const std::string& metadata_text, std::size_t replicates,
           double confidence, std::uint64_t seed, unsigned threads) {
            return score_csv_text(csv_text, metadata_text, Granularity::image_level, replicates,
                                  confidence, seed, threads);
        },
        py::arg("csv_text"), py::arg("metadata_text"), py::arg("replicates") = 2000,
        py::arg("confidence") = 0.95, py::arg("seed") = 0, py::arg("threads") = 0);

    py::register_exception<HarnessError>(m, "HarnessError", PyExc_ValueError);
}
