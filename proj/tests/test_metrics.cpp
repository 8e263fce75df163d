#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mammoeval/errors.hpp"
#include "mammoeval/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mammoeval;

namespace {

std::vector<ScoredSample> make(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
    std::vector<ScoredSample> samples(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        samples[i] = {scores[i], labels[i]};
    }
    return samples;
}

// Random instance with injected ties: scores on a dyadic grid, both
// classes guaranteed.
std::vector<ScoredSample> random_instance(std::mt19937_64& gen, std::size_t max_n) {
    const std::size_t n = 2 + gen() % (max_n - 1);
    std::vector<ScoredSample> samples(n);
    for (auto& s : samples) {
        s = {testsupport::grid_score(gen), static_cast<int>(gen() % 2)};
    }
    samples[0].label = 1;
    samples[1].label = 0;
    return samples;
}

// Straightforward restatement of the documented bootstrap procedure,
// kept separate from the library: its own seeding, its own index draws,
// its own quantiles, and the brute-force metric estimators.
struct OracleBootstrap {
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t skipped = 0;
};

OracleBootstrap bootstrap_oracle(const std::vector<ScoredSample>& samples, MetricKind kind,
                                 const EvaluationConfig& cfg) {
    const std::size_t n = samples.size();
    std::vector<double> stats;
    OracleBootstrap out;
    for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.master_seed & 0xffffffffu),
                          static_cast<std::uint32_t>(cfg.master_seed >> 32),
                          static_cast<std::uint32_t>(r & 0xffffffffu),
                          static_cast<std::uint32_t>(static_cast<std::uint64_t>(r) >> 32)};
        std::mt19937_64 gen(seq);
        std::uint64_t mask = 1;
        while (mask < n) {
            mask <<= 1;
        }
        --mask;
        const auto draw = [&]() -> std::size_t {
            for (;;) {
                const std::uint64_t v = gen() & mask;
                if (v < n) {
                    return static_cast<std::size_t>(v);
                }
            }
        };
        bool done = false;
        for (std::size_t attempt = 0; attempt <= cfg.max_redraws && !done; ++attempt) {
            std::vector<ScoredSample> resample(n);
            std::size_t pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                resample[i] = samples[draw()];
                pos += resample[i].label ? 1 : 0;
            }
            const bool computable =
                kind == MetricKind::auc_roc ? (pos > 0 && pos < n) : pos > 0;
            if (computable) {
                stats.push_back(kind == MetricKind::auc_roc
                                    ? oracles::auc_roc_pairs(resample)
                                    : oracles::auc_pr_thresholds(resample));
                done = true;
            }
        }
        if (!done) {
            ++out.skipped;
        }
    }
    std::sort(stats.begin(), stats.end());
    const auto quantile = [&](double q) {
        const double h = q * static_cast<double>(stats.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        if (lo + 1 >= stats.size()) {
            return stats.back();
        }
        return stats[lo] + (h - lo) * (stats[lo + 1] - stats[lo]);
    };
    const double alpha = 1.0 - cfg.confidence;
    out.ci_low = quantile(alpha / 2.0);
    out.ci_high = quantile(1.0 - alpha / 2.0);
    return out;
}

// Fixed 30-sample fixture for the pinned bootstrap interval.
std::vector<ScoredSample> golden_fixture() {
    std::mt19937_64 gen(1234);
    std::vector<ScoredSample> samples(30);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int label = i < 10 ? 1 : 0;
        const double base = label ? 0.55 : 0.35;
        samples[i] = {base + 0.4 * (static_cast<double>(gen() % 33) / 32.0 - 0.5), label};
    }
    return samples;
}

} // namespace

TEST_CASE("auc_roc matches hand-counted examples") {
    CHECK(auc_roc(make({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(auc_roc(make({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})) == 1.0);
    CHECK(auc_roc(make({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1})) == 0.5);
    CHECK(auc_roc(make({0.5, 0.5}, {1, 0})) == 0.5);
}

TEST_CASE("auc_roc rejects single-class input") {
    CHECK_THROWS_AS((void)auc_roc(make({0.1, 0.2}, {1, 1})), DegenerateLabelsError);
    CHECK_THROWS_AS((void)auc_roc(make({0.1, 0.2}, {0, 0})), DegenerateLabelsError);
    CHECK_THROWS_AS((void)auc_roc({}), DegenerateLabelsError);
}

TEST_CASE("auc_pr matches hand-enumerated examples") {
    CHECK(auc_pr(make({0.9, 0.8, 0.7}, {1, 0, 1})) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(auc_pr(make({0.2, 0.6, 0.9}, {0, 0, 1})) == 1.0);
    CHECK(auc_pr(make({0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 0})) == 0.25);
    CHECK_THROWS_AS((void)auc_pr(make({0.4, 0.5}, {0, 0})), DegenerateLabelsError);
}

TEST_CASE("estimators match the brute-force oracles on random instances") {
    std::mt19937_64 gen(20210614);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto samples = random_instance(gen, 30);
        CHECK(std::abs(auc_roc(samples) - oracles::auc_roc_pairs(samples)) < 1e-12);
        CHECK(std::abs(auc_pr(samples) - oracles::auc_pr_thresholds(samples)) < 1e-12);
    }
}

TEST_CASE("auc_roc is invariant under strictly increasing score transforms") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto samples = random_instance(gen, 25);
        const double before = auc_roc(samples);
        for (auto& s : samples) {
            s.score = 0.25 + 0.5 * s.score; // exact on the dyadic grid
        }
        CHECK(auc_roc(samples) == before);
    }
}

TEST_CASE("auc_roc complement symmetry") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto samples = random_instance(gen, 25);
        const double before = auc_roc(samples);
        for (auto& s : samples) {
            s.score = 1.0 - s.score;
        }
        CHECK(auc_roc(samples) == 1.0 - before);
    }
}

TEST_CASE("both AUCs stay in [0, 1]") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto samples = random_instance(gen, 20);
        const double roc = auc_roc(samples);
        const double pr = auc_pr(samples);
        CHECK(roc >= 0.0);
        CHECK(roc <= 1.0);
        CHECK(pr >= 0.0);
        CHECK(pr <= 1.0);
    }
}

TEST_CASE("roc_curve emits one point per threshold plus the origin") {
    const auto points = roc_curve(make({0.9, 0.1}, {1, 0}));
    REQUIRE(points.size() == 3);
    CHECK(points[0] == CurvePoint{0.0, 0.0});
    CHECK(points[1] == CurvePoint{0.0, 1.0});
    CHECK(points[2] == CurvePoint{1.0, 1.0});

    const auto tied = roc_curve(make({0.5, 0.5, 0.5}, {1, 0, 1}));
    REQUIRE(tied.size() == 2);
    CHECK(tied[0] == CurvePoint{0.0, 0.0});
    CHECK(tied[1] == CurvePoint{1.0, 1.0});
}

TEST_CASE("roc_curve is monotone and integrates to auc_roc") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto samples = random_instance(gen, 30);
        const auto points = roc_curve(samples);
        for (std::size_t i = 1; i < points.size(); ++i) {
            CHECK(points[i].x >= points[i - 1].x);
            CHECK(points[i].y >= points[i - 1].y);
        }
        CHECK(points.back() == CurvePoint{1.0, 1.0});
        CHECK(std::abs(trapezoid_area(points) - auc_roc(samples)) < 1e-12);
    }
}

TEST_CASE("pr_curve endpoints") {
    const auto points = pr_curve(make({0.9, 0.8, 0.7}, {1, 0, 1}));
    REQUIRE(points.size() == 4);
    CHECK(points.front() == CurvePoint{0.0, 1.0});
    CHECK(points.back().x == 1.0);
    CHECK(points.back().y == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("linear_quantile interpolates order statistics") {
    const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
    CHECK(linear_quantile(values, 0.0) == 1.0);
    CHECK(linear_quantile(values, 1.0) == 4.0);
    CHECK(linear_quantile(values, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(linear_quantile(values, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(linear_quantile(std::vector<double>{3.0}, 0.4) == 3.0);
}

TEST_CASE("format_point_ci renders three decimals with a hyphenated interval") {
    CHECK(format_point_ci(0.857, 0.802, 0.902) == "0.857 (0.802-0.902)");
    CHECK(format_point_ci(1.0, 1.0, 1.0) == "1.000 (1.000-1.000)");
    CHECK(format_point_ci(0.0, 0.0, 0.0) == "0.000 (0.000-0.000)");
}

TEST_CASE("bootstrap is deterministic and order-independent") {
    const auto samples = golden_fixture();
    EvaluationConfig cfg;
    cfg.n_replicates = 500;
    cfg.master_seed = 99;

    cfg.threads = 1;
    const auto serial = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    cfg.threads = 4;
    const auto parallel = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    CHECK(serial == parallel);

    const auto repeat = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    CHECK(repeat == parallel);
}

TEST_CASE("bootstrap of a perfectly separated sample is a degenerate interval") {
    const auto samples = make({0.9, 0.95, 0.85, 0.1, 0.2, 0.15}, {1, 1, 1, 0, 0, 0});
    EvaluationConfig cfg;
    cfg.n_replicates = 400;
    cfg.master_seed = 5;
    const auto result = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    CHECK(result.point == 1.0);
    CHECK(result.ci_low == 1.0);
    CHECK(result.ci_high == 1.0);
    CHECK(result.n_skipped == 0);
    CHECK(format_point_ci(result.point, result.ci_low, result.ci_high) == "1.000 (1.000-1.000)");

    const auto pr = bootstrap_ci(samples, MetricKind::auc_pr, MetricLevel::breast, cfg);
    CHECK(pr.ci_low == 1.0);
    CHECK(pr.ci_high == 1.0);
}

TEST_CASE("bootstrap interval matches the independent restatement and stays pinned") {
    const auto samples = golden_fixture();
    EvaluationConfig cfg;
    cfg.n_replicates = 2000;
    cfg.master_seed = 42;

    for (MetricKind kind : {MetricKind::auc_roc, MetricKind::auc_pr}) {
        const auto result = bootstrap_ci(samples, kind, MetricLevel::breast, cfg);
        const auto oracle = bootstrap_oracle(samples, kind, cfg);
        CHECK(result.ci_low == doctest::Approx(oracle.ci_low).epsilon(1e-12));
        CHECK(result.ci_high == doctest::Approx(oracle.ci_high).epsilon(1e-12));
        CHECK(result.n_skipped == oracle.skipped);
    }

    // Values recorded once from the restatement above.
    const auto roc = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    CHECK(roc.point == doctest::Approx(0.77).epsilon(1e-12));
    CHECK(roc.ci_low == doctest::Approx(0.6089375).epsilon(1e-9));
    CHECK(roc.ci_high == doctest::Approx(0.9125).epsilon(1e-9));
}

TEST_CASE("bootstrap skip budget") {
    // One positive among 31: a resample misses it with probability
    // (30/31)^31 ~ 0.36, so with no redraws the 10% budget blows.
    std::vector<ScoredSample> samples(31, ScoredSample{0.2, 0});
    samples[0] = {0.9, 1};
    EvaluationConfig cfg;
    cfg.n_replicates = 200;
    cfg.master_seed = 3;
    cfg.max_redraws = 0;
    CHECK_THROWS_AS(
        (void)bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg),
        TooManySkipsError);

    // With the default redraw budget the same input sails through.
    cfg.max_redraws = 100;
    const auto result = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
    CHECK(result.n_skipped == 0);
}

TEST_CASE("bootstrap interval width shrinks as the sample doubles") {
    std::mt19937_64 gen(2024);
    const auto normal = [&gen]() {
        // Box-Muller on uniforms from the raw stream
        const double u1 = (static_cast<double>(gen() >> 11) + 0.5) / 9007199254740992.0;
        const double u2 = (static_cast<double>(gen() >> 11) + 0.5) / 9007199254740992.0;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
    };
    const auto trial_width = [&](std::size_t n, std::uint64_t seed) {
        std::vector<ScoredSample> samples;
        for (std::size_t i = 0; i < n; ++i) {
            const int label = i % 2 == 0 ? 1 : 0;
            samples.push_back({normal() + (label ? 1.0 : 0.0), label});
        }
        EvaluationConfig cfg;
        cfg.n_replicates = 300;
        cfg.master_seed = seed;
        const auto r = bootstrap_ci(samples, MetricKind::auc_roc, MetricLevel::breast, cfg);
        return r.ci_high - r.ci_low;
    };
    double total_small = 0.0;
    double total_large = 0.0;
    for (int t = 0; t < 200; ++t) {
        total_small += trial_width(100, 1000 + t);
        total_large += trial_width(200, 2000 + t);
    }
    CHECK(total_large < total_small);
}
