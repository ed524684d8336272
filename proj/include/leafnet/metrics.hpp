#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leafnet/errors.hpp"

namespace leafnet {

/// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes, std::vector<std::string> names = {});

    std::size_t classes() const noexcept { return classes_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::uint64_t at(std::size_t truth, std::size_t predicted) const;
    void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_sum(std::size_t truth) const;
    std::uint64_t column_sum(std::size_t predicted) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t classes_ = 0;
    std::vector<std::string> names_;
    std::vector<std::uint64_t> counts_;
};

/// Tallies (label, prediction) pairs. Names default to the class ids.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t classes, std::vector<std::string> names = {});

/// trace / total. Throws ParameterError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    bool zero_division = false;  // some ratio was 0/0 and reported as 0
};

/// One-vs-rest metrics for class k; 0/0 yields 0.
ClassMetrics per_class_prf(const ConfusionMatrix& cm, std::size_t k);

struct AveragedMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Aggregates {
    double accuracy = 0.0;
    AveragedMetrics macro;
    AveragedMetrics weighted;
    std::uint64_t support = 0;
};

Aggregates aggregates(const ConfusionMatrix& cm);

struct ClassReport {
    std::vector<std::string> names;
    std::vector<ClassMetrics> classes;
    Aggregates summary;
};

ClassReport make_report(const ConfusionMatrix& cm);

/// Text report: `precision recall f1-score support` columns, one row per
/// class, then accuracy, macro avg and weighted avg. Metrics use half-up
/// rounding to two decimals.
std::string format_report(const ClassReport& report);

/// Half-up rounding of a value in [0, 1] to two decimals, as text.
std::string format_metric(double value);

/// Header `true_label,<names...>`, then one row per true class.
std::string cm_to_csv(const ConfusionMatrix& cm);
ConfusionMatrix cm_from_csv(const std::string& text);

}  // namespace leafnet
