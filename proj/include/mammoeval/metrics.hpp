#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mammoeval {

struct ScoredSample {
    double score = 0.0;
    int label = 0; // 1 = malignant
};

enum class MetricKind { auc_roc, auc_pr };
enum class MetricLevel { breast, image };

std::string_view to_string(MetricKind kind);
std::string_view to_string(MetricLevel level);
std::optional<MetricKind> metric_kind_from_string(std::string_view name);
std::optional<MetricLevel> metric_level_from_string(std::string_view name);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

struct EvaluationConfig {
    std::size_t n_replicates = 2000;
    double confidence = 0.95;
    std::uint64_t master_seed = 0;
    std::size_t max_redraws = 100;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct MetricResult {
    MetricKind metric = MetricKind::auc_roc;
    MetricLevel level = MetricLevel::breast;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<CurvePoint> curve; // ROC: (FPR, TPR); PR: (recall, precision)
    std::size_t n_samples = 0;
    std::size_t n_positives = 0;
    std::size_t n_replicates = 0;
    std::size_t n_skipped = 0;

    bool operator==(const MetricResult&) const = default;
};

/// Non-parametric AUC ROC: the Mann-Whitney statistic. Over all
/// (positive, negative) pairs, the fraction with score_pos > score_neg,
/// ties counted 1/2. Throws DegenerateLabelsError on single-class input.
double auc_roc(std::span<const ScoredSample> samples);

/// Step-wise average precision. Samples sorted by descending score, tied
/// scores form one threshold group, AP = sum over groups of
/// (R_i - R_{i-1}) * P_i. No trapezoidal interpolation; an all-tied input
/// yields the prevalence. Throws DegenerateLabelsError with no positives.
double auc_pr(std::span<const ScoredSample> samples);

/// ROC points: (0,0) plus one (FPR, TPR) point per distinct threshold.
/// Trapezoidal integration over these points equals auc_roc.
std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples);

/// PR points: (0,1) plus one (recall, precision) point per distinct
/// threshold; the last point has recall 1 and precision = prevalence.
std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples);

/// Percentile bootstrap. For each replicate r in [0, N): draw |samples|
/// units with replacement from a generator seeded by (master_seed, r);
/// if the resample cannot support the metric (single class), redraw up to
/// max_redraws times, then record the replicate as skipped. The interval
/// is the (alpha/2, 1-alpha/2) percentile pair over replicate statistics
/// using linear-interpolation quantiles; the point estimate and curve come
/// from the original sample. Replicates are independent of execution
/// order, so serial and parallel runs produce identical results. Throws
/// TooManySkipsError when more than 10% of replicates are skipped.
MetricResult bootstrap_ci(std::span<const ScoredSample> samples, MetricKind kind,
                          MetricLevel level, const EvaluationConfig& config);

/// The per-replicate generator: mt19937_64 seeded via seed_seq over the
/// 32-bit words of (master_seed, replicate).
std::mt19937_64 replicate_generator(std::uint64_t master_seed, std::uint64_t replicate);

/// Unbiased draw in [0, n) by masked rejection on the raw 64-bit stream.
std::size_t bounded_index(std::mt19937_64& gen, std::size_t n);

/// Linear interpolation between order statistics: h = (m-1)q over the
/// sorted values.
double linear_quantile(std::span<const double> sorted_values, double q);

double trapezoid_area(std::span<const CurvePoint> points);

/// "0.857 (0.802-0.902)" -- three decimals, hyphenated interval.
std::string format_point_ci(double point, double ci_low, double ci_high);

} // namespace mammoeval
