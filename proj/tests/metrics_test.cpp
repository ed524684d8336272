#include <gtest/gtest.h>

#include <string>

#include "leafnet/metrics.hpp"
#include "leafnet/rng.hpp"
#include "support/published_report.hpp"

using namespace leafnet;
namespace lt = leafnet::testing;

namespace {

std::string sp(std::size_t n) { return std::string(n, ' '); }

struct Tally {
    double tp = 0, fp = 0, fn = 0, support = 0;
};

// Brute-force one-vs-rest tally straight from the (label, prediction) pairs.
std::vector<Tally> tally(const std::vector<std::size_t>& preds, const std::vector<std::size_t>& labels, std::size_t k) {
    std::vector<Tally> t(k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const bool is_pred = preds[i] == c, is_true = labels[i] == c;
            t[c].tp += is_pred && is_true;
            t[c].fp += is_pred && !is_true;
            t[c].fn += !is_pred && is_true;
            t[c].support += is_true;
        }
    }
    return t;
}

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }

}  // namespace

TEST(ConfusionMatrix, HandCountedExample) {
    const std::vector<std::size_t> preds{1, 0}, labels{0, 0};
    const ConfusionMatrix cm = confusion_matrix(preds, labels, 2);
    EXPECT_EQ(cm.at(0, 0), 1u);
    EXPECT_EQ(cm.at(0, 1), 1u);
    EXPECT_EQ(cm.at(1, 0), 0u);
    EXPECT_EQ(cm.at(1, 1), 0u);
    EXPECT_EQ(cm.names(), (std::vector<std::string>{"0", "1"}));
}

TEST(ConfusionMatrix, PerfectPredictionsAreDiagonal) {
    const std::vector<std::size_t> ids{0, 1, 2, 2, 1};
    const ConfusionMatrix cm = confusion_matrix(ids, ids, 3);
    EXPECT_EQ(cm.trace(), 5u);
    EXPECT_EQ(accuracy(cm), 1.0);
}

TEST(ConfusionMatrix, RejectsBadInput) {
    const std::vector<std::size_t> a{0, 3}, b{0, 1}, c{0};
    EXPECT_THROW(confusion_matrix(a, b, 3), ParameterError);
    EXPECT_THROW(confusion_matrix(c, b, 3), ParameterError);
    EXPECT_THROW(accuracy(ConfusionMatrix(3)), ParameterError);
}

TEST(Accuracy, HalfOnUniformMatrix) {
    ConfusionMatrix cm(2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) cm.add(i, j);
    EXPECT_EQ(accuracy(cm), 0.5);
}

TEST(Metrics, RandomMatricesMatchBruteForceTally) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 5;
        std::vector<std::size_t> preds(500), labels(500);
        for (std::size_t i = 0; i < 500; ++i) {
            labels[i] = rng.below(k);
            preds[i] = rng.uniform() < 0.6 ? labels[i] : rng.below(k);
        }
        const ConfusionMatrix cm = confusion_matrix(preds, labels, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                std::uint64_t n = 0;
                for (std::size_t s = 0; s < 500; ++s) n += labels[s] == i && preds[s] == j;
                ASSERT_EQ(cm.at(i, j), n);
            }

        const std::vector<Tally> t = tally(preds, labels, k);
        const Aggregates agg = aggregates(cm);
        double mp = 0, mr = 0, mf = 0, wp = 0, wr = 0, wf = 0, correct = 0, micro_fp = 0, micro_fn = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double p = ratio(t[c].tp, t[c].tp + t[c].fp);
            const double r = ratio(t[c].tp, t[c].tp + t[c].fn);
            const double f = ratio(2 * p * r, p + r);
            const ClassMetrics m = per_class_prf(cm, c);
            EXPECT_DOUBLE_EQ(m.precision, p);
            EXPECT_DOUBLE_EQ(m.recall, r);
            EXPECT_DOUBLE_EQ(m.f1, f);
            EXPECT_EQ(m.support, static_cast<std::uint64_t>(t[c].support));
            mp += p / k;
            mr += r / k;
            mf += f / k;
            wp += p * t[c].support / 500;
            wr += r * t[c].support / 500;
            wf += f * t[c].support / 500;
            correct += t[c].tp;
            micro_fp += t[c].fp;
            micro_fn += t[c].fn;
        }
        EXPECT_DOUBLE_EQ(agg.accuracy, correct / 500);
        EXPECT_DOUBLE_EQ(agg.macro.precision, mp);
        EXPECT_DOUBLE_EQ(agg.macro.recall, mr);
        EXPECT_DOUBLE_EQ(agg.macro.f1, mf);
        EXPECT_DOUBLE_EQ(agg.weighted.precision, wp);
        EXPECT_DOUBLE_EQ(agg.weighted.recall, wr);
        EXPECT_DOUBLE_EQ(agg.weighted.f1, wf);
        EXPECT_EQ(agg.support, 500u);
        // Micro precision and recall both collapse to accuracy.
        EXPECT_DOUBLE_EQ(correct / (correct + micro_fp), agg.accuracy);
        EXPECT_DOUBLE_EQ(correct / (correct + micro_fn), agg.accuracy);
    }
}

TEST(Metrics, TwoClassHandTally) {
    ConfusionMatrix cm(2);
    cm.add(0, 0, 8);
    cm.add(0, 1, 2);
    cm.add(1, 0, 3);
    cm.add(1, 1, 7);
    const Aggregates a = aggregates(cm);
    const double p0 = 8.0 / 11, r0 = 0.8, p1 = 7.0 / 9, r1 = 0.7;
    const double f0 = 2 * p0 * r0 / (p0 + r0), f1 = 2 * p1 * r1 / (p1 + r1);
    EXPECT_DOUBLE_EQ(a.accuracy, 0.75);
    EXPECT_NEAR(a.macro.precision, (p0 + p1) / 2, 1e-15);
    EXPECT_NEAR(a.macro.recall, 0.75, 1e-15);
    EXPECT_NEAR(a.macro.f1, (f0 + f1) / 2, 1e-15);
    EXPECT_NEAR(a.weighted.f1, (f0 + f1) / 2, 1e-15);
}

TEST(Metrics, AbsentClassIsZeroByConvention) {
    ConfusionMatrix cm(3);
    cm.add(0, 0, 4);
    cm.add(1, 1, 2);
    const ClassMetrics m = per_class_prf(cm, 2);
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f1, 0.0);
    EXPECT_EQ(m.support, 0u);
    EXPECT_TRUE(m.zero_division);
}

TEST(Metrics, SpecExamplesFromPrintedRows) {
    EXPECT_NEAR(lt::harmonic(0.99, 0.93), 0.959, 5e-4);
    EXPECT_EQ(format_metric(lt::harmonic(0.99, 0.93)), "0.96");
    EXPECT_NEAR(lt::harmonic(0.98, 0.76), 0.856, 5e-4);
}

TEST(FormatMetric, HalfUpRounding) {
    EXPECT_EQ(format_metric(0.125), "0.13");
    EXPECT_EQ(format_metric(0.855), "0.86");
    EXPECT_EQ(format_metric(0.9549999), "0.95");
    EXPECT_EQ(format_metric(1.0), "1.00");
    EXPECT_EQ(format_metric(0.0), "0.00");
}

TEST(Report, PerfectTwoClassGolden) {
    ConfusionMatrix cm(2, {"healthy", "sick"});
    cm.add(0, 0, 3);
    cm.add(1, 1, 2);
    const std::string golden = sp(14) + "precision" + sp(4) + "recall" + sp(2) + "f1-score" + sp(3) + "support\n" +
                               "\n" +
                               sp(5) + "healthy" + sp(7) + "1.00" + sp(6) + "1.00" + sp(6) + "1.00" + sp(9) + "3\n" +
                               sp(8) + "sick" + sp(7) + "1.00" + sp(6) + "1.00" + sp(6) + "1.00" + sp(9) + "2\n" +
                               "\n" +
                               sp(4) + "accuracy" + sp(27) + "1.00" + sp(9) + "5\n" +
                               sp(3) + "macro avg" + sp(7) + "1.00" + sp(6) + "1.00" + sp(6) + "1.00" + sp(9) + "5\n" +
                               "weighted avg" + sp(7) + "1.00" + sp(6) + "1.00" + sp(6) + "1.00" + sp(9) + "5\n";
    EXPECT_EQ(format_report(make_report(cm)), golden);
}

TEST(Report, EmptyClassRendersZerosWithFooter) {
    ConfusionMatrix cm(2, {"a", "b"});
    cm.add(0, 0, 2);
    const std::string text = format_report(make_report(cm));
    EXPECT_NE(text.find(sp(11) + "b" + sp(7) + "0.00" + sp(6) + "0.00" + sp(6) + "0.00" + sp(9) + "0\n"),
              std::string::npos)
        << text;
    EXPECT_NE(text.find("zero denominator"), std::string::npos);
}

TEST(Report, PublishedRowsRenderInTheSameColumns) {
    ClassReport r;
    for (const lt::PublishedRow& row : lt::cnn_report_rows) {
        r.names.emplace_back(row.name);
        r.classes.push_back({row.precision, row.recall, row.f1, row.support, false});
    }
    r.summary.accuracy = lt::cnn_report_accuracy;
    r.summary.macro = {0.96, 0.96, 0.96};
    r.summary.weighted = {0.96, 0.96, 0.96};
    r.summary.support = lt::cnn_report_support;
    const std::string text = format_report(r);
    EXPECT_NE(text.find("Apple__Apple_scab" + sp(7) + "0.99" + sp(6) + "0.93" + sp(6) + "0.96" + sp(7) + "504\n"),
              std::string::npos);
    EXPECT_NE(text.find("Tomato__Septoria_leaf_spot" + sp(7) + "0.98" + sp(6) + "0.76" + sp(6) + "0.85" + sp(7) +
                        "436\n"),
              std::string::npos);
    EXPECT_NE(text.find("accuracy" + sp(27) + "0.96" + sp(5) + "17572\n"), std::string::npos);
    EXPECT_NE(text.find("weighted avg" + sp(7) + "0.96"), std::string::npos);
}

TEST(PublishedReport, SupportsSumToValidationSize) {
    std::uint64_t n = 0;
    for (const lt::PublishedRow& row : lt::cnn_report_rows) n += row.support;
    EXPECT_EQ(n, lt::cnn_report_support);
}

TEST(PublishedReport, EveryF1IsConsistentWithItsPrintedPrecisionAndRecall) {
    for (const lt::PublishedRow& row : lt::cnn_report_rows) {
        EXPECT_TRUE(lt::interval_f1_consistent(row)) << row.name;
    }
}

TEST(PublishedReport, StrictRecomputationDisagreesOnlyThroughDoubleRounding) {
    // Rows where rounding the recomputed F1 misses the printed F1 by one unit
    // in the last place; each is covered by the interval check above.
    std::vector<std::string> mismatches;
    for (const lt::PublishedRow& row : lt::cnn_report_rows) {
        if (!lt::strict_f1_match(row)) {
            mismatches.emplace_back(row.name);
            EXPECT_NEAR(lt::round2(lt::harmonic(row.precision, row.recall)), row.f1, 0.0100001) << row.name;
        }
    }
    EXPECT_LE(mismatches.size(), 6u);
}

TEST(PublishedReport, WeightedAveragesRoundToReportedValues) {
    const lt::WeightedAverages w = lt::published_weighted_averages();
    EXPECT_EQ(format_metric(w.precision), "0.96");
    EXPECT_EQ(format_metric(w.recall), "0.96");
    EXPECT_EQ(format_metric(w.f1), "0.96");
}

TEST(ConfusionCsv, TwoByTwoGolden) {
    ConfusionMatrix cm(2, {"healthy", "Pepper,_bell"});
    cm.add(0, 0, 3);
    cm.add(0, 1, 1);
    cm.add(1, 1, 2);
    EXPECT_EQ(cm_to_csv(cm), "true_label,healthy,\"Pepper,_bell\"\nhealthy,3,1\n\"Pepper,_bell\",0,2\n");
}

TEST(ConfusionCsv, RoundTrip) {
    Rng rng(2);
    std::vector<std::string> names;
    for (const lt::PublishedRow& row : lt::cnn_report_rows) names.emplace_back(row.name);
    ConfusionMatrix cm(38, names);
    for (int i = 0; i < 2000; ++i) cm.add(rng.below(38), rng.below(38));
    EXPECT_EQ(cm_from_csv(cm_to_csv(cm)), cm);
}

TEST(ConfusionCsv, ZeroMatrixHas39Lines) {
    const std::string csv = cm_to_csv(ConfusionMatrix(38));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 39);
    EXPECT_EQ(cm_from_csv(csv).total(), 0u);
}

TEST(ConfusionCsv, MalformedInputThrows) {
    EXPECT_THROW(cm_from_csv(""), ParameterError);
    EXPECT_THROW(cm_from_csv("label,a\na,1\n"), ParameterError);
    EXPECT_THROW(cm_from_csv("true_label,a,b\na,1,2\n"), ParameterError);
}
