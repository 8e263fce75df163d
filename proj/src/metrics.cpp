#include "mammoeval/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "mammoeval/errors.hpp"

namespace mammoeval {

std::string_view to_string(MetricKind kind) {
    return kind == MetricKind::auc_roc ? "AUC_ROC" : "AUC_PR";
}

std::string_view to_string(MetricLevel level) {
    return level == MetricLevel::breast ? "breast" : "image";
}

std::optional<MetricKind> metric_kind_from_string(std::string_view name) {
    if (name == "AUC_ROC") return MetricKind::auc_roc;
    if (name == "AUC_PR") return MetricKind::auc_pr;
    return std::nullopt;
}

std::optional<MetricLevel> metric_level_from_string(std::string_view name) {
    if (name == "breast") return MetricLevel::breast;
    if (name == "image") return MetricLevel::image;
    return std::nullopt;
}

namespace {

struct ClassCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const ScoredSample> samples) {
    ClassCounts counts;
    for (const ScoredSample& s : samples) {
        (s.label ? counts.pos : counts.neg)++;
    }
    return counts;
}

std::vector<std::size_t> order_by_score(std::span<const ScoredSample> samples, bool descending) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return descending ? samples[a].score > samples[b].score
                          : samples[a].score < samples[b].score;
    });
    return order;
}

// Calls fn(group_pos, group_neg) once per distinct score, in sort order.
template <typename Fn>
void for_each_tie_group(std::span<const ScoredSample> samples,
                        const std::vector<std::size_t>& order, Fn&& fn) {
    std::size_t i = 0;
    while (i < order.size()) {
        const double score = samples[order[i]].score;
        std::size_t group_pos = 0;
        std::size_t group_neg = 0;
        for (; i < order.size() && samples[order[i]].score == score; ++i) {
            (samples[order[i]].label ? group_pos : group_neg)++;
        }
        fn(group_pos, group_neg);
    }
}

} // namespace

double auc_roc(std::span<const ScoredSample> samples) {
    const ClassCounts counts = count_classes(samples);
    if (counts.pos == 0 || counts.neg == 0) {
        throw DegenerateLabelsError("AUC ROC needs at least one positive and one negative");
    }
    const auto order = order_by_score(samples, /*descending=*/false);
    double credit = 0.0; // concordant pairs, ties at half weight
    std::size_t negatives_below = 0;
    for_each_tie_group(samples, order, [&](std::size_t group_pos, std::size_t group_neg) {
        credit += static_cast<double>(group_pos) * static_cast<double>(negatives_below) +
                  0.5 * static_cast<double>(group_pos) * static_cast<double>(group_neg);
        negatives_below += group_neg;
    });
    return credit / (static_cast<double>(counts.pos) * static_cast<double>(counts.neg));
}

double auc_pr(std::span<const ScoredSample> samples) {
    const ClassCounts counts = count_classes(samples);
    if (counts.pos == 0) {
        throw DegenerateLabelsError("AUC PR needs at least one positive");
    }
    const auto order = order_by_score(samples, /*descending=*/true);
    double average_precision = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0;
    std::size_t seen = 0;
    for_each_tie_group(samples, order, [&](std::size_t group_pos, std::size_t group_neg) {
        tp += group_pos;
        seen += group_pos + group_neg;
        const double recall = static_cast<double>(tp) / static_cast<double>(counts.pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        average_precision += (recall - recall_prev) * precision;
        recall_prev = recall;
    });
    return average_precision;
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples) {
    const ClassCounts counts = count_classes(samples);
    if (counts.pos == 0 || counts.neg == 0) {
        throw DegenerateLabelsError("ROC curve needs at least one positive and one negative");
    }
    const auto order = order_by_score(samples, /*descending=*/true);
    std::vector<CurvePoint> points;
    points.push_back({0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for_each_tie_group(samples, order, [&](std::size_t group_pos, std::size_t group_neg) {
        tp += group_pos;
        fp += group_neg;
        points.push_back({static_cast<double>(fp) / static_cast<double>(counts.neg),
                          static_cast<double>(tp) / static_cast<double>(counts.pos)});
    });
    return points;
}

std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples) {
    const ClassCounts counts = count_classes(samples);
    if (counts.pos == 0) {
        throw DegenerateLabelsError("PR curve needs at least one positive");
    }
    const auto order = order_by_score(samples, /*descending=*/true);
    std::vector<CurvePoint> points;
    points.push_back({0.0, 1.0});
    std::size_t tp = 0;
    std::size_t seen = 0;
    for_each_tie_group(samples, order, [&](std::size_t group_pos, std::size_t group_neg) {
        tp += group_pos;
        seen += group_pos + group_neg;
        points.push_back({static_cast<double>(tp) / static_cast<double>(counts.pos),
                          static_cast<double>(tp) / static_cast<double>(seen)});
    });
    return points;
}

std::mt19937_64 replicate_generator(std::uint64_t master_seed, std::uint64_t replicate) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replicate & 0xffffffffu),
                      static_cast<std::uint32_t>(replicate >> 32)};
    return std::mt19937_64(seq);
}

std::size_t bounded_index(std::mt19937_64& gen, std::size_t n) {
    const std::uint64_t mask = std::bit_ceil(static_cast<std::uint64_t>(n)) - 1;
    for (;;) {
        const std::uint64_t v = gen() & mask;
        if (v < n) {
            return static_cast<std::size_t>(v);
        }
    }
}

double linear_quantile(std::span<const double> sorted_values, double q) {
    if (sorted_values.empty()) {
        throw std::invalid_argument("quantile of empty range");
    }
    q = std::clamp(q, 0.0, 1.0);
    const std::size_t m = sorted_values.size();
    if (m == 1) {
        return sorted_values[0];
    }
    const double h = static_cast<double>(m - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= m) {
        return sorted_values[m - 1];
    }
    const double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

double trapezoid_area(std::span<const CurvePoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) * 0.5;
    }
    return area;
}

std::string format_point_ci(double point, double ci_low, double ci_high) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.3f (%.3f-%.3f)", point, ci_low, ci_high);
    return buffer;
}

MetricResult bootstrap_ci(std::span<const ScoredSample> samples, MetricKind kind,
                          MetricLevel level, const EvaluationConfig& config) {
    if (config.n_replicates < 1) {
        throw std::invalid_argument("n_replicates must be >= 1");
    }
    if (!(config.confidence > 0.0 && config.confidence < 1.0)) {
        throw std::invalid_argument("confidence must be in (0, 1)");
    }

    const auto metric_fn = kind == MetricKind::auc_roc ? auc_roc : auc_pr;

    MetricResult result;
    result.metric = kind;
    result.level = level;
    result.point = metric_fn(samples); // throws DegenerateLabelsError up front
    result.curve = kind == MetricKind::auc_roc ? roc_curve(samples) : pr_curve(samples);
    const ClassCounts counts = count_classes(samples);
    result.n_samples = samples.size();
    result.n_positives = counts.pos;
    result.n_replicates = config.n_replicates;

    const std::size_t n = samples.size();
    const std::size_t replicates = config.n_replicates;
    std::vector<double> stats(replicates, 0.0);
    std::vector<unsigned char> skipped(replicates, 0);

    const auto computable = [kind](std::size_t pos, std::size_t neg) {
        return kind == MetricKind::auc_roc ? (pos > 0 && neg > 0) : pos > 0;
    };

    const auto run_replicate = [&](std::size_t r) {
        std::mt19937_64 gen = replicate_generator(config.master_seed, r);
        std::vector<ScoredSample> resample(n);
        for (std::size_t attempt = 0; attempt <= config.max_redraws; ++attempt) {
            std::size_t pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                resample[i] = samples[bounded_index(gen, n)];
                pos += resample[i].label ? 1 : 0;
            }
            if (computable(pos, n - pos)) {
                stats[r] = metric_fn(resample);
                return;
            }
        }
        skipped[r] = 1;
    };

    unsigned threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
    if (threads == 1) {
        for (std::size_t r = 0; r < replicates; ++r) {
            run_replicate(r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t r = next.fetch_add(1);
                    if (r >= replicates) {
                        return;
                    }
                    run_replicate(r);
                }
            });
        }
        for (auto& worker : pool) {
            worker.join();
        }
    }

    std::vector<double> kept;
    kept.reserve(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        if (!skipped[r]) {
            kept.push_back(stats[r]);
        }
    }
    result.n_skipped = replicates - kept.size();
    if (result.n_skipped * 10 > replicates) {
        throw TooManySkipsError("bootstrap skipped " + std::to_string(result.n_skipped) + " of " +
                                std::to_string(replicates) +
                                " replicates (single-class resamples)");
    }
    std::sort(kept.begin(), kept.end());
    const double alpha = 1.0 - config.confidence;
    result.ci_low = linear_quantile(kept, alpha / 2.0);
    result.ci_high = linear_quantile(kept, 1.0 - alpha / 2.0);
    return result;
}

} // namespace mammoeval
